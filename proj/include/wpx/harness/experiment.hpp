#pragma once

// Multi-arm online-style experiment. Every arm sees the same event stream and
// the same per-item randomness, so arm differences come from template choice
// alone. Day 0..warmup_days-1 serve uniformly random templates; afterwards each
// arm's ranker chooses and is refreshed nightly.

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wpx/bandit/ranker.hpp"
#include "wpx/dml/estimator.hpp"
#include "wpx/harness/ab.hpp"
#include "wpx/harness/offline_eval.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"
#include "wpx/sim/panel_emit.hpp"
#include "wpx/sim/session.hpp"
#include "wpx/sim/world.hpp"

namespace wpx::harness {

enum class SatisfactionMode { None, CtrWeights, DvwpxWeights };

constexpr std::string_view to_string(SatisfactionMode m) {
    switch (m) {
        case SatisfactionMode::None: return "none";
        case SatisfactionMode::CtrWeights: return "ctr_weights";
        case SatisfactionMode::DvwpxWeights: return "dvwpx_weights";
    }
    return "?";
}

inline SatisfactionMode parse_satisfaction_mode(std::string_view s) {
    if (s == "none") return SatisfactionMode::None;
    if (s == "ctr_weights") return SatisfactionMode::CtrWeights;
    if (s == "dvwpx_weights") return SatisfactionMode::DvwpxWeights;
    throw DomainError("unknown satisfaction mode '" + std::string(s) + "'");
}

struct ArmConfig {
    std::string name;
    SatisfactionMode satisfaction_mode = SatisfactionMode::None;
    std::array<double, kObjectiveCount> reward_weights{0.5, 0.2, 0.0};
};

inline std::vector<ArmConfig> default_arms() {
    return {{"control", SatisfactionMode::None, {0.5, 0.2, 0.0}},
            {"t1", SatisfactionMode::CtrWeights, {0.5, 0.2, 0.3}},
            {"t2", SatisfactionMode::DvwpxWeights, {0.5, 0.2, 0.3}}};
}

struct ExperimentConfig {
    sim::WorldConfig world;
    std::vector<ArmConfig> arms = default_arms();
    int days = 8;
    int sessions_per_day = 3000;
    int warmup_days = 1;
    std::uint64_t seed = 1;
    std::size_t dvwpx_panel_events = 20000;
    dml::Stage2Method stage2 = dml::Stage2Method::Ols;
    int bootstrap_n = 1000;
    double holdout_fraction = 0.01;
    double retrain_fraction = 0.5;
    /// Re-derive CTR region weights from simulated clicks instead of the published ones.
    bool reestimate_ctr_weights = false;

    void validate() const {
        world.validate();
        if (arms.empty()) throw DomainError("ExperimentConfig: arms must be non-empty");
        for (std::size_t i = 0; i < arms.size(); ++i) {
            if (arms[i].name.empty()) throw DomainError("ExperimentConfig: arm name must be non-empty");
            for (std::size_t j = 0; j < i; ++j)
                if (arms[j].name == arms[i].name) throw DomainError("ExperimentConfig: duplicate arm '" + arms[i].name + "'");
        }
        if (!(warmup_days >= 1 && days >= warmup_days)) throw DomainError("ExperimentConfig: need days >= warmup_days >= 1");
        if (sessions_per_day < 1) throw DomainError("ExperimentConfig: sessions_per_day must be >= 1");
        if (bootstrap_n < 1) throw DomainError("ExperimentConfig: bootstrap_n must be >= 1");
        if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw DomainError("ExperimentConfig: holdout_fraction in [0,1)");
        if (!(retrain_fraction > 0.0 && retrain_fraction <= 1.0)) throw DomainError("ExperimentConfig: retrain_fraction in (0,1]");
    }
};

struct ArmSummary {
    std::string name;
    SatisfactionMode satisfaction_mode = SatisfactionMode::None;
    std::array<double, kObjectiveCount> reward_weights{};
    std::optional<RegionWeights> region_weights;
    std::size_t sessions = 0;
    double revenue = 0.0;
    double long_term_revenue = 0.0;
    double search_ctr = 0.0;
    double pr_wp_bmr_ctr = 0.0;
    std::optional<double> pr_wp_bmr_dvwpx;
    std::vector<double> template_share;
    OfflineEvalResult offline;
};

struct ArmLifts {
    std::string arm;
    std::string control;
    std::vector<LiftRow> rows;

    const LiftRow* find(std::string_view metric) const {
        for (const auto& r : rows)
            if (r.metric == metric) return &r;
        return nullptr;
    }
};

struct DailyRow {
    int day = 0;
    std::string arm;
    std::size_t sessions = 0;
    double revenue = 0.0;
    double long_term_revenue = 0.0;
    double search_ctr = 0.0;
    double pr_wp_bmr_ctr = 0.0;
};

struct DvwpxSummary {
    std::size_t panel_events = 0;
    dml::Stage2Method stage2 = dml::Stage2Method::Ols;
    std::vector<std::string> surrogates;
    std::vector<double> beta;
    std::vector<double> stderr_beta;
    std::optional<double> lambda;
    RegionWeights weights;
};

struct ExperimentReport {
    ExperimentConfig config;
    RegionWeights ctr_weights = RegionWeights::ctr_based();
    std::optional<DvwpxSummary> dvwpx;
    std::vector<ArmSummary> arms;
    std::vector<ArmLifts> lifts;
    std::vector<DailyRow> daily;
    std::vector<std::string> warnings;

    const ArmSummary* arm(std::string_view name) const {
        for (const auto& a : arms)
            if (a.name == name) return &a;
        return nullptr;
    }
    const ArmLifts* lift(std::string_view name) const {
        for (const auto& l : lifts)
            if (l.arm == name) return &l;
        return nullptr;
    }
};

/// Optional by-products of a run: final bundles and, on request, every impression.
struct ExperimentArtifacts {
    bool keep_impressions = false;
    std::vector<std::string> arms;
    std::vector<bandit::RankerBundle> bundles;
    std::vector<std::vector<bandit::ImpressionRecord>> impressions;
};

/// Region weights proportional to the click-through rate of each region's slots.
inline RegionWeights ctr_region_weights(const std::vector<sim::SimulatedEvent>& events) {
    std::array<double, kRegionCount> clicks{}, slots{};
    for (const auto& se : events) {
        for (std::size_t i = 0; i < se.layout.slots.size(); ++i) {
            const auto r = static_cast<std::size_t>(region_of_position(se.layout.slots[i].position));
            slots[r] += 1.0;
            if (se.session && se.session->clicks[i]) clicks[r] += 1.0;
        }
    }
    std::array<double, kRegionCount> ctr{};
    for (std::size_t r = 0; r < kRegionCount; ++r) ctr[r] = slots[r] > 0.0 ? clicks[r] / slots[r] : 0.0;
    return dml::region_weights_from_effects(ctr[0], ctr[1], ctr[2]);
}

namespace detail {

inline bandit::ObjectiveStats stats_of(const std::vector<double>& v) {
    if (v.empty()) return {};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    return {mean, sd > 0.0 ? sd : 1.0};
}

/// Normalization stats frozen from the warm-up impressions.
inline std::array<bandit::ObjectiveStats, kObjectiveCount> warmup_stats(
    const std::vector<bandit::ImpressionRecord>& log, const std::optional<RegionWeights>& weights) {
    std::vector<double> rev, na, sat;
    for (const auto& r : log) {
        rev.push_back(r.revenue);
        if (r.context.device == Device::Desktop) na.push_back(r.non_abandonment ? 1.0 : 0.0);
        if (weights) sat.push_back(pr_wp_bmr(r.region_bmr, *weights));
    }
    return {stats_of(rev), stats_of(na), stats_of(sat)};
}

struct ArmState {
    bandit::RankerBundle bundle;
    std::vector<bandit::ImpressionRecord> train_today;
    std::vector<bandit::ImpressionRecord> warmup_log;
    std::vector<bandit::ImpressionRecord> holdout;
    MetricLog metrics;
    std::vector<std::size_t> template_counts;
    DailyRow day_acc;
};

}  // namespace detail

inline const std::vector<std::string>& report_metric_names(bool with_dvwpx) {
    static const std::vector<std::string> base{"revenue", "long_term_revenue", "search_ctr", "pr_wp_bmr"};
    static const std::vector<std::string> ext{"revenue", "long_term_revenue", "search_ctr", "pr_wp_bmr",
                                              "pr_wp_bmr_dvwpx"};
    return with_dvwpx ? ext : base;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config, ExperimentArtifacts* artifacts = nullptr) {
    config.validate();
    if (artifacts) {
        *artifacts = ExperimentArtifacts{artifacts->keep_impressions, {}, {}, {}};
        artifacts->impressions.resize(config.arms.size());
    }
    ExperimentReport report;
    report.config = config;

    sim::WorldConfig wc = config.world;
    wc.seed = config.seed;
    const sim::World world = sim::generate_world(wc);
    const auto templates = sim::template_ids(world);

    // Offline region weights from randomized traffic, before the online phase.
    bool need_dvwpx = false;
    for (const auto& a : config.arms) need_dvwpx = need_dvwpx || a.satisfaction_mode == SatisfactionMode::DvwpxWeights;
    std::vector<sim::SimulatedEvent> panel_events;
    if (need_dvwpx || config.reestimate_ctr_weights)
        panel_events = sim::simulate_randomized_events(world, config.dvwpx_panel_events);
    if (config.reestimate_ctr_weights) report.ctr_weights = ctr_region_weights(panel_events);
    if (need_dvwpx) {
        dml::DmlConfig dc;
        dc.stage2 = config.stage2;
        dc.seed = config.seed;
        const auto model = dml::estimate_dvwpx(sim::emit_panel(world, panel_events), dc);
        DvwpxSummary d;
        d.panel_events = panel_events.size();
        d.stage2 = config.stage2;
        d.surrogates = model.surrogate_schema;
        d.beta.assign(model.estimate.beta.data(), model.estimate.beta.data() + model.estimate.beta.size());
        d.stderr_beta.assign(model.estimate.stderr_beta.data(),
                             model.estimate.stderr_beta.data() + model.estimate.stderr_beta.size());
        d.lambda = model.estimate.lambda_selected;
        d.weights = dml::derive_region_weights(model, {"top", "mid", "bot"});
        report.dvwpx = d;
    }
    panel_events.clear();
    panel_events.shrink_to_fit();

    const bool with_dvwpx = report.dvwpx.has_value();
    const auto& metric_names = report_metric_names(with_dvwpx);

    std::vector<detail::ArmState> arms;
    for (const auto& a : config.arms) {
        std::optional<RegionWeights> rw;
        if (a.satisfaction_mode == SatisfactionMode::CtrWeights) rw = report.ctr_weights;
        if (a.satisfaction_mode == SatisfactionMode::DvwpxWeights) rw = report.dvwpx->weights;
        bandit::RewardWeights weights;
        weights.weight = a.reward_weights;
        auto bundle = bandit::make_bundle(templates, weights, rw);
        if (a.satisfaction_mode == SatisfactionMode::None && bundle.satisfaction)
            throw InvariantViolation("control arm instantiated a satisfaction model");
        detail::ArmState st{std::move(bundle), {}, {}, {}, MetricLog(metric_names),
                            std::vector<std::size_t>(templates.size(), 0), {}};
        arms.push_back(std::move(st));
    }

    for (int day = 0; day < config.days; ++day) {
        const bool warmup = day < config.warmup_days;
        std::vector<std::optional<bandit::RankerSnapshot>> snapshots(arms.size());
        if (!warmup)
            for (std::size_t a = 0; a < arms.size(); ++a) snapshots[a].emplace(arms[a].bundle);
        for (auto& st : arms) st.day_acc = DailyRow{day, "", 0, 0.0, 0.0, 0.0, 0.0};

        for (int s = 0; s < config.sessions_per_day; ++s) {
            const auto event_id = static_cast<std::uint64_t>(day) * static_cast<std::uint64_t>(config.sessions_per_day) +
                                  static_cast<std::uint64_t>(s);
            const sim::Event ev = sim::draw_event(world, event_id, day);
            const auto candidates = sim::eligible_layouts(world, ev);
            const auto ctx = sim::context_of(world, ev, candidates);
            const BrandId brand = sim::query_brand(world, ev);
            const bool held_out =
                config.holdout_fraction > 0.0 &&
                Rng::stream(config.seed, Stream::Holdout, {event_id}).bernoulli(config.holdout_fraction);
            const std::size_t warm_pick =
                Rng::stream(config.seed, Stream::Warmup, {event_id}).below(candidates.size());

            for (std::size_t a = 0; a < arms.size(); ++a) {
                auto& st = arms[a];
                std::size_t pick = warm_pick;
                if (!warmup) {
                    Rng trng = Rng::stream(config.seed, Stream::Thompson, {event_id, a});
                    pick = snapshots[a]->select(ctx, candidates, trng).index;
                }
                const PageLayout& layout = candidates[pick];
                const auto session = sim::simulate_session(world, ev, layout);
                const auto lt = sim::realize_long_term(world, ev, layout, session);

                bandit::ImpressionRecord rec;
                rec.event_id = event_id;
                rec.day = day;
                rec.available_day = day;
                rec.context = ctx;
                rec.context.content_signals = {ctx.content_signals[pick]};
                rec.template_id = layout.template_id;
                rec.revenue = session.short_term_revenue;
                rec.non_abandonment = session.non_abandonment;
                rec.region_bmr = region_bmrs(brand_match_page(layout, brand));

                if (!warmup) {
                    const double bmr_ctr = pr_wp_bmr(rec.region_bmr, report.ctr_weights);
                    const double ctr = session.non_abandonment ? 1.0 : 0.0;
                    if (with_dvwpx) {
                        st.metrics.add({rec.revenue, lt.long_term_revenue, ctr, bmr_ctr,
                                        pr_wp_bmr(rec.region_bmr, report.dvwpx->weights)});
                    } else {
                        st.metrics.add({rec.revenue, lt.long_term_revenue, ctr, bmr_ctr});
                    }
                    ++st.template_counts[layout.template_id.value];
                    st.day_acc.sessions += 1;
                    st.day_acc.revenue += rec.revenue;
                    st.day_acc.long_term_revenue += lt.long_term_revenue;
                    st.day_acc.search_ctr += ctr;
                    st.day_acc.pr_wp_bmr_ctr += bmr_ctr;
                }
                if (warmup) st.warmup_log.push_back(rec);
                if (artifacts && artifacts->keep_impressions) artifacts->impressions[a].push_back(rec);
                if (held_out && !warmup) {
                    st.holdout.push_back(std::move(rec));
                } else {
                    st.train_today.push_back(std::move(rec));
                }
            }
        }

        // Nightly refresh on the day's short-term outcomes.
        for (std::size_t a = 0; a < arms.size(); ++a) {
            auto& st = arms[a];
            if (day == config.warmup_days - 1) {
                st.bundle.reward_weights.stats = detail::warmup_stats(st.warmup_log, st.bundle.region_weights);
                st.bundle.validate();
                st.warmup_log.clear();
            }
            Rng rrng = Rng::stream(config.seed, Stream::Retrain, {static_cast<std::uint64_t>(day), a});
            bandit::incremental_retrain(st.bundle, st.train_today, config.retrain_fraction, rrng, day);
            st.train_today.clear();
            if (!warmup && st.day_acc.sessions > 0) {
                DailyRow row = st.day_acc;
                const auto n = static_cast<double>(row.sessions);
                row.arm = config.arms[a].name;
                row.revenue /= n;
                row.long_term_revenue /= n;
                row.search_ctr /= n;
                row.pr_wp_bmr_ctr /= n;
                report.daily.push_back(row);
            }
        }
    }

    for (std::size_t a = 0; a < arms.size(); ++a) {
        auto& st = arms[a];
        const auto& cfg = config.arms[a];
        ArmSummary sum;
        sum.name = cfg.name;
        sum.satisfaction_mode = cfg.satisfaction_mode;
        sum.reward_weights = st.bundle.reward_weights.weight;
        sum.region_weights = st.bundle.region_weights;
        sum.sessions = st.metrics.size();
        if (sum.sessions > 0) {
            sum.revenue = st.metrics.mean(0);
            sum.long_term_revenue = st.metrics.mean(1);
            sum.search_ctr = st.metrics.mean(2);
            sum.pr_wp_bmr_ctr = st.metrics.mean(3);
            if (with_dvwpx) sum.pr_wp_bmr_dvwpx = st.metrics.mean(4);
            for (auto c : st.template_counts)
                sum.template_share.push_back(static_cast<double>(c) / static_cast<double>(sum.sessions));
        }
        if (!st.holdout.empty()) {
            sum.offline = offline_eval(st.bundle, st.holdout);
        } else {
            sum.offline.warnings.push_back("no held-out impressions");
        }
        for (const auto& w : sum.offline.warnings) report.warnings.push_back(cfg.name + ": " + w);
        report.arms.push_back(std::move(sum));
        if (artifacts) {
            artifacts->arms.push_back(cfg.name);
            artifacts->bundles.push_back(st.bundle);
        }
    }

    if (arms.front().metrics.size() > 0) {
        for (std::size_t a = 1; a < arms.size(); ++a) {
            ArmLifts l;
            l.arm = config.arms[a].name;
            l.control = config.arms.front().name;
            l.rows = ab_compare(arms.front().metrics, arms[a].metrics, config.bootstrap_n, config.seed + a);
            report.lifts.push_back(std::move(l));
        }
    } else if (arms.size() > 1) {
        report.warnings.push_back("no post-warm-up sessions; lifts omitted");
    }
    return report;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string pct(const std::optional<double>& v) { return v ? fmt("%+.3f%%", 100.0 * *v) : "n/a"; }

}  // namespace detail

/// Human-readable summary.
inline std::string render_table(const ExperimentReport& r) {
    std::ostringstream os;
    os << "arm            sessions     revenue   long_term   search_ctr   pr_wp_bmr\n";
    for (const auto& a : r.arms) {
        char line[160];
        std::snprintf(line, sizeof line, "%-12s %10zu %11.4f %11.4f %12.5f %11.5f\n", a.name.c_str(), a.sessions,
                      a.revenue, a.long_term_revenue, a.search_ctr, a.pr_wp_bmr_ctr);
        os << line;
    }
    if (r.dvwpx) {
        os << "\nregion weights (dv-wpx): " << detail::fmt("%.4f", r.dvwpx->weights.top) << " "
           << detail::fmt("%.4f", r.dvwpx->weights.mid) << " " << detail::fmt("%.4f", r.dvwpx->weights.bot) << "\n";
    }
    if (!r.lifts.empty()) {
        os << "\nrelative lift vs " << r.lifts.front().control << "\n";
        os << "arm          metric               lift          95% CI\n";
        for (const auto& l : r.lifts) {
            for (const auto& row : l.rows) {
                char line[200];
                std::snprintf(line, sizeof line, "%-12s %-18s %10s   [%s, %s]\n", l.arm.c_str(), row.metric.c_str(),
                              detail::pct(row.lift).c_str(), detail::pct(row.ci_low).c_str(),
                              detail::pct(row.ci_high).c_str());
                os << line;
            }
        }
    }
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

}  // namespace wpx::harness
