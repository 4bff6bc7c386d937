#pragma once

// Multi-objective template ranker: one model per objective, Thompson samples
// combined by a normalized weighted sum, argmax over eligible templates, and a
// daily incremental refresh on a subsample of the latest day.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wpx/bandit/features.hpp"
#include "wpx/bandit/posterior.hpp"
#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"

namespace wpx::bandit {

struct ObjectiveStats {
    double mean = 0.0;
    double std = 1.0;
};

struct RewardWeights {
    std::array<double, kObjectiveCount> weight{0.5, 0.2, 0.3};
    std::array<ObjectiveStats, kObjectiveCount> stats{};

    double operator[](Objective o) const { return weight[static_cast<std::size_t>(o)]; }
    const ObjectiveStats& stat(Objective o) const { return stats[static_cast<std::size_t>(o)]; }

    void validate() const {
        bool any = false;
        for (std::size_t i = 0; i < kObjectiveCount; ++i) {
            if (!std::isfinite(weight[i])) throw DomainError("reward weights: non-finite weight");
            if (!(stats[i].std > 0.0) || !std::isfinite(stats[i].std) || !std::isfinite(stats[i].mean)) {
                throw DomainError("reward weights: std for '" + std::string(to_string(static_cast<Objective>(i))) +
                                  "' must be finite and > 0");
            }
            any = any || weight[i] != 0.0;
        }
        if (!any) throw DomainError("reward weights: all weights are zero");
    }
};

/// Sampled (or realized) value per objective; absent objectives do not contribute.
using ObjectiveSamples = std::array<std::optional<double>, kObjectiveCount>;

inline double scalarize(const ObjectiveSamples& samples, const RewardWeights& w) {
    double score = 0.0;
    for (std::size_t i = 0; i < kObjectiveCount; ++i) {
        if (!(w.stats[i].std > 0.0)) throw DomainError("scalarize: std must be > 0");
        if (!samples[i]) continue;
        score += w.weight[i] * (*samples[i] - w.stats[i].mean) / w.stats[i].std;
    }
    return score;
}

struct RankerBundle {
    static constexpr int kSchemaVersion = 1;

    FeatureSchema schema;
    ObjectiveModel revenue;
    ObjectiveModel non_abandonment;
    /// Absent when the arm has no satisfaction objective.
    std::optional<ObjectiveModel> satisfaction;
    RewardWeights reward_weights;
    /// Weights that turn region brand-match rates into satisfaction targets.
    std::optional<RegionWeights> region_weights;

    void validate() const {
        reward_weights.validate();
        const auto& names = schema.names();
        if (revenue.kind != ModelKind::Linear || revenue.feature_schema != names)
            throw InvariantViolation("bundle: revenue model must be linear on the bundle schema");
        if (non_abandonment.kind != ModelKind::Probit || non_abandonment.feature_schema != names)
            throw InvariantViolation("bundle: non-abandonment model must be probit on the bundle schema");
        if (satisfaction) {
            if (satisfaction->kind != ModelKind::Linear || satisfaction->feature_schema != names)
                throw InvariantViolation("bundle: satisfaction model must be linear on the bundle schema");
            if (!region_weights) throw InvariantViolation("bundle: satisfaction model without region weights");
        } else if (reward_weights[Objective::Satisfaction] != 0.0) {
            throw InvariantViolation("bundle: satisfaction weight set but no satisfaction model");
        }
    }
};

/// Fresh bundle with prior models. A satisfaction model is created only when
/// region weights are given.
inline RankerBundle make_bundle(std::vector<TemplateId> templates, RewardWeights reward_weights,
                                std::optional<RegionWeights> region_weights) {
    RankerBundle b;
    b.schema = FeatureSchema(std::move(templates));
    b.revenue = make_linear_model(b.schema.names());
    b.non_abandonment = make_probit_model(b.schema.names());
    if (region_weights) {
        region_weights->validate();
        b.satisfaction = make_linear_model(b.schema.names());
        b.region_weights = region_weights;
    } else {
        reward_weights.weight[static_cast<std::size_t>(Objective::Satisfaction)] = 0.0;
    }
    b.reward_weights = reward_weights;
    b.validate();
    return b;
}

/// Objectives the ranker optimizes for a context: non-abandonment only on desktop.
inline std::array<bool, kObjectiveCount> active_objectives(const RankerBundle& b, Device device) {
    return {b.reward_weights[Objective::Revenue] != 0.0,
            device == Device::Desktop && b.reward_weights[Objective::NonAbandonment] != 0.0,
            b.satisfaction.has_value() && b.reward_weights[Objective::Satisfaction] != 0.0};
}

struct CandidateScore {
    TemplateId template_id;
    ObjectiveSamples samples;
    double score = 0.0;
};

struct Selection {
    std::size_t index = 0;
    TemplateId template_id;
    std::vector<CandidateScore> trace;
};

/// Immutable inference snapshot: one factorization per model, reused across requests.
class RankerSnapshot {
public:
    explicit RankerSnapshot(const RankerBundle& b) : bundle_(&b), revenue_(b.revenue), non_abandonment_(b.non_abandonment) {
        if (b.satisfaction) satisfaction_.emplace(*b.satisfaction);
    }

    const RankerBundle& bundle() const { return *bundle_; }

    /// Candidate i uses `ctx.content_signals[i]`. One posterior draw per
    /// objective per candidate, in candidate order then objective order.
    Selection select(const ContextFeatures& ctx, std::span<const PageLayout> candidates, Rng& rng) const {
        if (candidates.empty()) throw DomainError("select_template: empty candidate list");
        if (ctx.content_signals.size() != candidates.size())
            throw DomainError("select_template: content signals do not match candidates");
        const auto active = active_objectives(*bundle_, ctx.device);
        Selection out;
        out.trace.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto x = bundle_->schema.build(ctx, candidates[i].template_id, ctx.content_signals[i]);
            CandidateScore cs;
            cs.template_id = candidates[i].template_id;
            if (active[0]) cs.samples[0] = revenue_.draw(x, rng);
            if (active[1]) cs.samples[1] = non_abandonment_.draw(x, rng);
            if (active[2]) cs.samples[2] = satisfaction_->draw(x, rng);
            cs.score = scalarize(cs.samples, bundle_->reward_weights);
            out.trace.push_back(cs);
            const auto& best = out.trace[out.index];
            if (i > 0 && (cs.score > best.score || (cs.score == best.score && cs.template_id < best.template_id)))
                out.index = i;
        }
        out.template_id = candidates[out.index].template_id;
        return out;
    }

private:
    const RankerBundle* bundle_;
    ThompsonSampler revenue_;
    ThompsonSampler non_abandonment_;
    std::optional<ThompsonSampler> satisfaction_;
};

inline Selection select_template(const ContextFeatures& ctx, std::span<const PageLayout> candidates,
                                 const RankerBundle& bundle, Rng& rng) {
    return RankerSnapshot(bundle).select(ctx, candidates, rng);
}

/// One displayed impression with its realized short-term targets. The context
/// carries the displayed candidate's content signals only.
struct ImpressionRecord {
    std::uint64_t event_id = 0;
    int day = 0;
    /// First day on which the targets may be used for training.
    int available_day = 0;
    ContextFeatures context;
    TemplateId template_id;
    double revenue = 0.0;
    bool non_abandonment = false;
    std::array<double, kRegionCount> region_bmr{};

    std::vector<double> features(const FeatureSchema& schema) const {
        if (context.content_signals.size() != 1) throw DomainError("impression: expected one content signal vector");
        return schema.build(context, template_id, context.content_signals.front());
    }
};

struct RetrainStats {
    std::size_t rows_sampled = 0;
    std::size_t revenue_updates = 0;
    std::size_t non_abandonment_updates = 0;
    std::size_t satisfaction_updates = 0;
};

/// ceil(fraction * n) distinct row indices, ascending.
inline std::vector<std::size_t> sample_retrain_rows(std::size_t n, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("retrain: sample fraction must be in (0,1]");
    const auto k = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Variance of the day's targets, floored; used as the linear models' noise variance.
inline double target_noise_variance(std::span<const double> y) {
    if (y.size() < 2) return 1.0;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return std::max(kNoiseVarianceFloor, ss / static_cast<double>(y.size() - 1));
}

/// Throws InvariantViolation if any record is not yet available on `day`.
inline void audit_availability(std::span<const ImpressionRecord> log, int day) {
    for (const auto& r : log) {
        if (r.available_day > day) {
            throw InvariantViolation("retrain for day " + std::to_string(day) + " consumed event " +
                                     std::to_string(r.event_id) + " available on day " +
                                     std::to_string(r.available_day));
        }
    }
}

/// Applies the given rows of `log` to the bundle in order. Linear noise
/// variances are re-estimated from the whole log first.
inline RetrainStats apply_impressions(RankerBundle& bundle, std::span<const ImpressionRecord> log,
                                      std::span<const std::size_t> rows) {
    RetrainStats st;
    st.rows_sampled = rows.size();
    if (rows.empty()) return st;

    std::vector<double> rev_all, sat_all;
    rev_all.reserve(log.size());
    for (const auto& r : log) rev_all.push_back(r.revenue);
    if (bundle.satisfaction) {
        for (const auto& r : log) sat_all.push_back(pr_wp_bmr(r.region_bmr, *bundle.region_weights));
    }

    const auto p = static_cast<Eigen::Index>(bundle.schema.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), p);
    Eigen::VectorXd y_rev(X.rows()), y_sat(X.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = log[rows[i]];
        const auto x = r.features(bundle.schema);
        X.row(static_cast<Eigen::Index>(i)) = detail::as_vector(x).transpose();
        y_rev(static_cast<Eigen::Index>(i)) = r.revenue;
        if (bundle.satisfaction) y_sat(static_cast<Eigen::Index>(i)) = sat_all[rows[i]];
    }

    RankerBundle next = bundle;
    next.revenue.noise_variance = target_noise_variance(rev_all);
    blr_update_batch(next.revenue, X, y_rev);
    st.revenue_updates = rows.size();
    if (next.satisfaction) {
        next.satisfaction->noise_variance = target_noise_variance(sat_all);
        blr_update_batch(*next.satisfaction, X, y_sat);
        st.satisfaction_updates = rows.size();
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = log[rows[i]];
        if (r.context.device != Device::Desktop) continue;
        const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
        probit_update(next.non_abandonment, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                      r.non_abandonment);
        ++st.non_abandonment_updates;
    }
    bundle = std::move(next);
    return st;
}

/// Nightly refresh for `day`: audit availability, subsample, update. Posteriors
/// carry over from the previous state.
inline RetrainStats incremental_retrain(RankerBundle& bundle, std::span<const ImpressionRecord> day_log,
                                        double sample_fraction, Rng& rng, int day) {
    if (day_log.empty()) return {};
    audit_availability(day_log, day);
    const auto rows = sample_retrain_rows(day_log.size(), sample_fraction, rng);
    return apply_impressions(bundle, day_log, rows);
}

}  // namespace wpx::bandit
