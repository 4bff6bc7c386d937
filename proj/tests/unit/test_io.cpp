#include <gtest/gtest.h>

#include <sstream>

#include "wpx/io.hpp"
#include "wpx/wpx.hpp"

using namespace wpx;
using io::Json;

namespace {

harness::ExperimentConfig tiny_experiment() {
    harness::ExperimentConfig c;
    c.world.n_customers = 400;
    c.world.n_queries = 30;
    c.world.n_zips = 8;
    c.days = 2;
    c.sessions_per_day = 150;
    c.dvwpx_panel_events = 3000;
    c.bootstrap_n = 30;
    c.holdout_fraction = 0.05;
    return c;
}

struct Fixture {
    sim::World world;
    sim::Event event;
    std::vector<PageLayout> candidates;
    ContextFeatures context;

    Fixture() : world(sim::generate_world(tiny_experiment().world)), event(sim::draw_event(world, 3, 0)) {
        candidates = sim::eligible_layouts(world, event);
        context = sim::context_of(world, event, candidates);
    }
};

}  // namespace

TEST(Io, ExperimentConfigRoundTrip) {
    auto c = tiny_experiment();
    c.stage2 = dml::Stage2Method::Lasso;
    c.reestimate_ctr_weights = true;
    c.world.noise_scale = 0.4;
    const Json j = io::to_json(c);
    const auto back = io::experiment_config_from_json(j);
    EXPECT_EQ(io::to_json(back).dump(), j.dump());
    EXPECT_EQ(back.stage2, dml::Stage2Method::Lasso);
    EXPECT_EQ(back.world.noise_scale, 0.4);
}

TEST(Io, ConfigDefaultsAndUnknownKeys) {
    const auto c = io::experiment_config_from_json(Json::parse(R"({"days": 4, "arms": [
        {"name": "c", "satisfaction_mode": "none"},
        {"name": "t", "satisfaction_mode": "dvwpx_weights"}]})"));
    EXPECT_EQ(c.days, 4);
    EXPECT_EQ(c.sessions_per_day, harness::ExperimentConfig{}.sessions_per_day);
    EXPECT_EQ(c.arms[0].reward_weights[2], 0.0);
    EXPECT_EQ(c.arms[1].reward_weights[2], 0.3);
    EXPECT_THROW(io::experiment_config_from_json(Json::parse(R"({"dayz": 4})")), DomainError);
    EXPECT_THROW(io::experiment_config_from_json(Json::parse(R"({"world": {"n_customer": 4}})")), DomainError);
    EXPECT_THROW(io::experiment_config_from_json(Json::parse(R"({"arms": [{"name": "x", "satisfaction_mode": "best"}]})")),
                 DomainError);
    EXPECT_THROW(io::experiment_config_from_json(Json::parse(R"({"days": 0})")), DomainError);
}

TEST(Io, LayoutAndRankRequestRoundTrip) {
    const Fixture f;
    for (const auto& l : f.candidates) {
        const auto back = io::layout_from_json(io::to_json(l));
        EXPECT_EQ(io::to_json(back).dump(), io::to_json(l).dump());
        EXPECT_TRUE(validate_layout(back, f.world.templates[back.template_id.value]).empty());
    }
    io::RankRequest req{f.context, sim::query_brand(f.world, f.event), f.candidates};
    const auto back = io::rank_request_from_json(Json::parse(io::to_json(req).dump()));
    EXPECT_EQ(back.candidates.size(), f.candidates.size());
    EXPECT_EQ(back.context.content_signals, f.context.content_signals);
    EXPECT_EQ(back.context.device, f.context.device);
    EXPECT_EQ(back.context.query_specificity, f.context.query_specificity);
}

TEST(Io, BundleRoundTripPreservesSelections) {
    const Fixture f;
    bandit::RewardWeights w;
    w.weight = {0.5, 0.2, 0.3};
    auto b = bandit::make_bundle(sim::template_ids(f.world), w, RegionWeights::ctr_based());
    std::vector<bandit::ImpressionRecord> log;
    for (std::uint64_t id = 0; id < 200; ++id) {
        const auto e = sim::draw_event(f.world, id, 0);
        const auto cands = sim::eligible_layouts(f.world, e);
        const auto& l = cands[id % cands.size()];
        const auto s = sim::simulate_session(f.world, e, l);
        bandit::ImpressionRecord r;
        r.event_id = id;
        r.context = sim::context_of(f.world, e, std::span<const PageLayout>(&l, 1));
        r.template_id = l.template_id;
        r.revenue = s.short_term_revenue;
        r.non_abandonment = s.non_abandonment;
        r.region_bmr = region_bmrs(brand_match_page(l, sim::query_brand(f.world, e)));
        log.push_back(r);
    }
    Rng rr(1);
    bandit::incremental_retrain(b, log, 1.0, rr, 0);

    const Json j = io::to_json(b);
    const auto back = io::bundle_from_json(Json::parse(j.dump()));
    EXPECT_EQ(io::to_json(back).dump(), j.dump());
    EXPECT_TRUE(back.revenue.posterior.mean == b.revenue.posterior.mean);
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng r1(s), r2(s);
        EXPECT_EQ(bandit::select_template(f.context, f.candidates, b, r1).template_id,
                  bandit::select_template(f.context, f.candidates, back, r2).template_id);
    }

    auto control = bandit::make_bundle(sim::template_ids(f.world), w, std::nullopt);
    const auto cback = io::bundle_from_json(io::to_json(control));
    EXPECT_FALSE(cback.satisfaction);
    EXPECT_FALSE(cback.region_weights);

    Json broken = j;
    broken["surprise"] = 1;
    EXPECT_THROW(io::bundle_from_json(broken), DomainError);
}

TEST(Io, ImpressionJsonlRoundTrip) {
    auto cfg = tiny_experiment();
    harness::ExperimentArtifacts art;
    art.keep_impressions = true;
    harness::run_experiment(cfg, &art);
    std::ostringstream os;
    io::write_jsonl(os, art.impressions[1]);
    std::istringstream is(os.str());
    const auto back = io::read_jsonl(is);
    ASSERT_EQ(back.size(), art.impressions[1].size());
    std::ostringstream again;
    io::write_jsonl(again, back);
    EXPECT_EQ(again.str(), os.str());
    const auto& first = Json::parse(os.str().substr(0, os.str().find('\n')));
    for (const char* key : {"ts", "available_day", "context", "template_id", "targets"}) EXPECT_TRUE(first.contains(key));
}

TEST(Io, ReportRoundTripAndTable) {
    const auto r = harness::run_experiment(tiny_experiment());
    const Json j = io::to_json(r);
    const auto back = io::report_from_json(Json::parse(j.dump()));
    EXPECT_EQ(io::to_json(back).dump(), j.dump());
    const auto table = harness::render_table(back);
    EXPECT_NE(table.find("relative lift"), std::string::npos);
    std::ostringstream csv;
    io::write_daily_csv(csv, r);
    std::string header;
    std::istringstream in(csv.str());
    std::getline(in, header);
    EXPECT_EQ(header.substr(0, 4), "day,");
    const std::string text = csv.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.daily.size() + 1);
}

TEST(Io, FileHelpersReportErrors) {
    EXPECT_THROW(io::load_json("/nonexistent/path.json"), DomainError);
}
