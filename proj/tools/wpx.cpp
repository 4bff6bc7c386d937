// wpx: command-line front end for simulation, DV-WPX estimation, template
// ranking and A/B experiments.
//
// Exit codes: 0 success, 1 usage error, 2 estimation failure, 3 invariant violation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wpx/io.hpp"
#include "wpx/wpx.hpp"

namespace fs = std::filesystem;
using namespace wpx;
using io::Json;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string arms;
    std::optional<int> days;
    std::optional<std::string> stage2;
    std::string panel;
    std::string bundle;
    std::string context;
    std::string report;
    std::size_t events = 50000;
    bool impressions = false;
};

harness::ExperimentConfig load_config(const Options& o) {
    harness::ExperimentConfig c;
    if (!o.config.empty()) c = io::experiment_config_from_json(io::load_json(o.config));
    if (o.seed) c.seed = *o.seed;
    if (o.days) c.days = *o.days;
    if (o.stage2) c.stage2 = dml::parse_stage2(*o.stage2);
    if (!o.arms.empty()) {
        std::vector<harness::ArmConfig> picked;
        std::stringstream ss(o.arms);
        std::string name;
        while (std::getline(ss, name, ',')) {
            auto it = std::find_if(c.arms.begin(), c.arms.end(), [&](const auto& a) { return a.name == name; });
            if (it == c.arms.end()) throw DomainError("--arms: no arm named '" + name + "' in the config");
            picked.push_back(*it);
        }
        c.arms = std::move(picked);
    }
    c.validate();
    return c;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DomainError("cannot create directory " + dir + ": " + ec.message());
}

int cmd_simulate(const Options& o) {
    auto cfg = load_config(o);
    sim::WorldConfig wc = cfg.world;
    wc.seed = cfg.seed;
    const auto world = sim::generate_world(wc);
    ensure_dir(o.out);

    auto events = sim::simulate_randomized_events(world, o.events);
    const auto panel = sim::emit_panel(world, events);
    dml::save_panel_csv(o.out + "/panel.csv", panel);

    Json templates = Json::array();
    for (const auto& t : world.templates) {
        std::string plan;
        for (const auto& s : t.slot_plan) plan += s.content_kind == ContentKind::Widget ? 'W' : 'O';
        templates.push_back(Json{{"template_id", t.template_id.value}, {"name", t.name}, {"slots", plan}});
    }
    io::save_json(o.out + "/world.json", Json{{"config", io::to_json(wc)},
                                              {"templates", templates},
                                              {"catalog_items", world.catalog.size()},
                                              {"panel_events", panel.size()}});

    // A ready-made ranking request from a fresh event.
    const auto ev = sim::draw_event(world, 0, 0);
    io::RankRequest req;
    req.candidates = sim::eligible_layouts(world, ev);
    req.context = sim::context_of(world, ev, req.candidates);
    req.query_brand = sim::query_brand(world, ev);
    io::save_json(o.out + "/sample_context.json", io::to_json(req));

    std::cout << "wrote " << panel.size() << " panel rows to " << o.out << "/panel.csv\n";
    return 0;
}

int cmd_estimate(const Options& o) {
    if (o.panel.empty()) throw DomainError("estimate: --panel is required");
    const auto panel = dml::load_panel_csv(o.panel);
    dml::DmlConfig dc;
    if (o.seed) dc.seed = *o.seed;
    if (o.stage2) dc.stage2 = dml::parse_stage2(*o.stage2);
    const auto model = dml::estimate_dvwpx(panel, dc);
    const auto& e = model.estimate;

    std::printf("%-14s %12s %12s\n", "surrogate", "beta", "stderr");
    for (Eigen::Index i = 0; i < e.beta.size(); ++i)
        std::printf("%-14s %12.6f %12.6f\n", model.surrogate_schema[static_cast<std::size_t>(i)].c_str(), e.beta(i),
                    e.stderr_beta(i));
    if (e.lambda_selected) std::printf("lambda         %12.6g\n", *e.lambda_selected);
    std::printf("test rmse      %12.6f   (n_train %zu, n_test %zu)\n", e.diagnostics.test_rmse,
                e.diagnostics.n_train, e.diagnostics.n_test);

    Json out = io::to_json(model);
    const auto& s = model.surrogate_schema;
    const bool has_regions = std::find(s.begin(), s.end(), "top") != s.end() &&
                             std::find(s.begin(), s.end(), "mid") != s.end() &&
                             std::find(s.begin(), s.end(), "bot") != s.end();
    if (has_regions) {
        const auto w = dml::derive_region_weights(model, {"top", "mid", "bot"});
        std::printf("region weights top %.4f  mid %.4f  bot %.4f\n", w.top, w.mid, w.bot);
        out["region_weights"] = Json{{"top", w.top}, {"mid", w.mid}, {"bot", w.bot}};
    }
    ensure_dir(o.out);
    io::save_json(o.out + "/dvwpx_model.json", out);
    return 0;
}

int cmd_rank(const Options& o) {
    if (o.bundle.empty() || o.context.empty()) throw DomainError("rank: --bundle and --context are required");
    const auto bundle = io::bundle_from_json(io::load_json(o.bundle));
    const auto req = io::rank_request_from_json(io::load_json(o.context));
    Rng rng = Rng::stream(o.seed.value_or(1), Stream::Thompson);
    const auto sel = bandit::select_template(req.context, req.candidates, bundle, rng);

    Json trace = Json::array();
    for (const auto& c : sel.trace) {
        Json samples = Json::object();
        for (std::size_t i = 0; i < kObjectiveCount; ++i)
            if (c.samples[i]) samples[std::string(to_string(static_cast<Objective>(i)))] = *c.samples[i];
        trace.push_back(Json{{"template_id", c.template_id.value}, {"samples", samples}, {"score", c.score}});
    }
    std::cout << Json{{"chosen_template", sel.template_id.value}, {"trace", trace}}.dump(2) << "\n";
    return 0;
}

int cmd_experiment(const Options& o) {
    const auto cfg = load_config(o);
    harness::ExperimentArtifacts art;
    art.keep_impressions = o.impressions;
    const auto report = harness::run_experiment(cfg, &art);

    ensure_dir(o.out);
    io::save_json(o.out + "/report.json", io::to_json(report));
    {
        std::ostringstream csv;
        io::write_daily_csv(csv, report);
        io::save_text(o.out + "/daily.csv", csv.str());
    }
    ensure_dir(o.out + "/bundles");
    for (std::size_t a = 0; a < art.arms.size(); ++a) {
        io::save_json(o.out + "/bundles/" + art.arms[a] + ".json", io::to_json(art.bundles[a]));
        if (o.impressions) {
            std::ostringstream jl;
            io::write_jsonl(jl, art.impressions[a]);
            io::save_text(o.out + "/impressions_" + art.arms[a] + ".jsonl", jl.str());
        }
    }
    std::cout << harness::render_table(report);
    return 0;
}

int cmd_report(const Options& o) {
    if (o.report.empty()) throw DomainError("report: --report is required");
    std::cout << harness::render_table(io::report_from_json(io::load_json(o.report)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Whole-page experience tools: simulate, estimate, rank, experiment, report"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--out", o.out, "Output directory");
    };

    auto* simulate = app.add_subcommand("simulate", "Generate a world and a randomized-assignment panel");
    add_common(simulate);
    simulate->add_option("--events", o.events, "Number of panel events")->check(CLI::PositiveNumber);

    auto* estimate = app.add_subcommand("estimate", "Fit DV-WPX on a panel CSV and derive region weights");
    add_common(estimate);
    estimate->add_option("--panel", o.panel, "Panel CSV")->required()->check(CLI::ExistingFile);
    estimate->add_option("--stage2", o.stage2, "Stage-2 regression")->check(CLI::IsMember({"ols", "lasso"}));

    auto* rank = app.add_subcommand("rank", "Select a template for one request");
    rank->add_option("--bundle", o.bundle, "Ranker bundle JSON")->required()->check(CLI::ExistingFile);
    rank->add_option("--context", o.context, "Request JSON (context, query_brand, candidates)")
        ->required()
        ->check(CLI::ExistingFile);
    rank->add_option("--seed", o.seed, "Random seed");

    auto* experiment = app.add_subcommand("experiment", "Run the multi-arm experiment");
    add_common(experiment);
    experiment->add_option("--arms", o.arms, "Comma-separated arm names to run (first is control)");
    experiment->add_option("--days", o.days, "Simulated days")->check(CLI::PositiveNumber);
    experiment->add_option("--stage2", o.stage2, "Stage-2 regression")->check(CLI::IsMember({"ols", "lasso"}));
    experiment->add_flag("--impressions", o.impressions, "Also write per-arm impression logs (JSONL)");

    auto* report = app.add_subcommand("report", "Re-render a saved report");
    report->add_option("--report", o.report, "report.json")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*estimate) return cmd_estimate(o);
        if (*rank) return cmd_rank(o);
        if (*experiment) return cmd_experiment(o);
        if (*report) return cmd_report(o);
    } catch (const EstimationError& e) {
        std::cerr << "estimation failed at stage '" << e.stage() << "': " << e.what() << "\n";
        return 2;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
