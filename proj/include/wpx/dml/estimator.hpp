#pragma once

// DV-WPX estimation with double machine learning:
//   0. de-average every numeric column over (query group, ZIP)
//   1. split train/test, residualize target, X and M on H by cross-fitting
//   2. regress the residualized target on residualized [X | M] (OLS or LASSO)
// The fitted surrogate effects score events and normalize into region weights.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wpx/dml/crossfit.hpp"
#include "wpx/dml/deaverage.hpp"
#include "wpx/dml/panel.hpp"
#include "wpx/dml/regression.hpp"
#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"

namespace wpx::dml {

enum class Stage2Method { Ols, Lasso };

constexpr std::string_view to_string(Stage2Method m) { return m == Stage2Method::Ols ? "ols" : "lasso"; }

inline Stage2Method parse_stage2(std::string_view s) {
    if (s == "ols" || s == "OLS") return Stage2Method::Ols;
    if (s == "lasso" || s == "LASSO") return Stage2Method::Lasso;
    throw DomainError("unknown stage-2 method '" + std::string(s) + "'");
}

struct DmlConfig {
    int deaverage_iterations = 20;
    double train_fraction = 0.90;
    int crossfit_folds = 2;
    Stage2Method stage2 = Stage2Method::Ols;
    int lasso_grid_points = 20;
    int lasso_cv_folds = 3;
    std::uint64_t seed = 0;

    void validate() const {
        if (deaverage_iterations < 1) throw DomainError("DmlConfig: deaverage_iterations must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("DmlConfig: train_fraction in (0,1)");
        if (crossfit_folds < 2 || lasso_cv_folds < 2) throw DomainError("DmlConfig: folds must be >= 2");
        if (lasso_grid_points < 2) throw DomainError("DmlConfig: lasso_grid_points must be >= 2");
    }
};

struct DmlDiagnostics {
    double max_group_mean_query = 0.0;
    double max_group_mean_zip = 0.0;
    int deaverage_iterations_run = 0;
    std::vector<double> stage1_fold_rmse;  // flattened folds x outcomes, row-major
    double stage2_train_rmse = 0.0;
    double test_rmse = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    bool ridge_fallback = false;
};

struct DmlEstimate {
    Eigen::VectorXd beta;         // surrogate effects, length S
    Eigen::VectorXd theta;        // short-term metric effects, length J
    Eigen::VectorXd gamma;        // history controls, length K
    Eigen::VectorXd stderr_beta;  // classical OLS standard errors on the stage-2 design
    std::optional<double> lambda_selected;
    DmlDiagnostics diagnostics;
};

struct DvwpxModel {
    DmlEstimate estimate;
    std::vector<std::string> surrogate_schema;
    PanelSchema panel_schema;
    HorizonConfig horizon;
    DmlConfig config;
};

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded partition; the train side has round(n * fraction) rows, clamped so
/// both sides are non-empty.
inline TrainTestSplit split_train_test(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("split: fraction must be in (0,1)");
    if (n < 2) throw DomainError("split: need at least 2 rows");
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, Stream::Split, {n});
    rng.shuffle(std::span<std::size_t>(order));
    TrainTestSplit s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

inline std::pair<PanelDataset, PanelDataset> split_train_test(const PanelDataset& data, double train_fraction,
                                                              std::uint64_t seed) {
    const auto s = split_train_test(data.size(), train_fraction, seed);
    PanelDataset train{data.schema, {}}, test{data.schema, {}};
    for (auto i : s.train) train.records.push_back(data.records[i]);
    for (auto i : s.test) test.records.push_back(data.records[i]);
    return {std::move(train), std::move(test)};
}

namespace detail {

template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const EstimationError& e) {
        if (e.stage() == stage) throw;
        throw EstimationError(stage, e.what());
    } catch (const std::exception& e) {
        throw EstimationError(stage, e.what());
    }
}

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    return m(idx, Eigen::all);
}

}  // namespace detail

inline DvwpxModel estimate_dvwpx(const PanelDataset& data, const DmlConfig& config,
                                 const HorizonConfig& horizon = {}) {
    detail::run_stage("validation", [&] {
        config.validate();
        horizon.validate();
        data.validate();
        return 0;
    });
    const auto S = static_cast<Eigen::Index>(data.schema.s());
    const auto J = static_cast<Eigen::Index>(data.schema.j());
    const auto K = static_cast<Eigen::Index>(data.schema.k());
    if (S == 0) throw EstimationError("validation", "panel has no surrogate columns");
    const std::size_t min_rows = std::max<std::size_t>(500, static_cast<std::size_t>(10 * (S + J + K)));
    if (data.size() < min_rows) {
        throw EstimationError("validation", "need at least " + std::to_string(min_rows) + " rows, got " +
                                                std::to_string(data.size()));
    }

    DvwpxModel model;
    model.surrogate_schema = data.schema.x_names;
    model.panel_schema = data.schema;
    model.horizon = horizon;
    model.config = config;
    auto& est = model.estimate;
    auto& diag = est.diagnostics;

    // Stage 0: fixed effects out of every numeric column.
    const Eigen::MatrixXd values = detail::run_stage("deaverage", [&] {
        std::vector<std::string> q_keys, z_keys;
        for (const auto& r : data.records) {
            q_keys.push_back(r.query_group);
            z_keys.push_back(r.zip);
        }
        auto res = deaverage(panel_matrix(data), index_groups(q_keys), index_groups(z_keys),
                             DeaverageOptions{config.deaverage_iterations});
        diag.max_group_mean_query = res.max_group_mean_query;
        diag.max_group_mean_zip = res.max_group_mean_zip;
        diag.deaverage_iterations_run = res.iterations_run;
        return std::move(res.values);
    });

    const auto split = detail::run_stage("split", [&] {
        return split_train_test(data.size(), config.train_fraction, config.seed);
    });
    diag.n_train = split.train.size();
    diag.n_test = split.test.size();

    // Column blocks of `values`: [drev | X | M | H].
    const Eigen::Index outcome_cols = 1 + S + J;
    const Eigen::MatrixXd train = detail::rows_of(values, split.train);
    const Eigen::MatrixXd test = detail::rows_of(values, split.test);
    const Eigen::MatrixXd train_outcomes = train.leftCols(outcome_cols);
    const Eigen::MatrixXd train_h = train.rightCols(K);

    // Stage 1: cross-fit residuals of target, X and M on history.
    const Eigen::MatrixXd resid = detail::run_stage("crossfit", [&] {
        if (K == 0) return Eigen::MatrixXd(train_outcomes);
        auto cf = crossfit_residualize(train_outcomes, train_h, config.crossfit_folds, config.seed);
        diag.ridge_fallback = cf.ridge_fallback;
        diag.stage1_fold_rmse.assign(cf.fold_rmse.data(), cf.fold_rmse.data() + cf.fold_rmse.size());
        return std::move(cf.residuals);
    });

    // Stage 2: residualized target on residualized [X | M].
    const Eigen::VectorXd y = resid.col(0);
    const Eigen::MatrixXd design = resid.middleCols(1, S + J);
    detail::run_stage("stage2", [&] {
        const auto ols = ols_fit(design, y);
        Eigen::VectorXd coef = ols.beta;
        if (config.stage2 == Stage2Method::Lasso) {
            auto cv = lasso_cv(design, y, config.lasso_grid_points, config.lasso_cv_folds, config.seed);
            coef = cv.beta;
            est.lambda_selected = cv.lambda_star;
        }
        est.beta = coef.head(S);
        est.theta = coef.tail(J);
        est.stderr_beta = ols.stderr_beta.head(S);
        diag.stage2_train_rmse = std::sqrt((y - design * coef).squaredNorm() / static_cast<double>(y.size()));

        // History effects from the de-averaged (not residualized) train data.
        if (K > 0) {
            const Eigen::VectorXd partial = train.col(0) - train.middleCols(1, S + J) * coef;
            est.gamma = ols_fit(train_h, partial).beta;
        } else {
            est.gamma = Eigen::VectorXd(0);
        }
        return 0;
    });

    // Out-of-sample check on the held-out fold: stage-1 models refit on all of train.
    detail::run_stage("test", [&] {
        Eigen::MatrixXd test_resid = test.leftCols(outcome_cols);
        if (K > 0) {
            const auto ridge = RidgeModel::fit(train_h, train_outcomes,
                                               kStage1RidgeFactor * static_cast<double>(train_h.rows()));
            test_resid -= ridge.predict(test.rightCols(K));
        }
        Eigen::VectorXd coef(S + J);
        coef << est.beta, est.theta;
        const Eigen::VectorXd err = test_resid.col(0) - test_resid.middleCols(1, S + J) * coef;
        diag.test_rmse = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
        return 0;
    });
    return model;
}

inline double dvwpx_score(const DvwpxModel& model, std::span<const double> x) {
    const auto& beta = model.estimate.beta;
    if (static_cast<Eigen::Index>(x.size()) != beta.size()) {
        throw DomainError("dvwpx_score: expected " + std::to_string(beta.size()) + " surrogates, got " +
                          std::to_string(x.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += beta(static_cast<Eigen::Index>(i)) * x[i];
    return s;
}

/// Clamp-then-normalize: negative region effects count as zero.
inline RegionWeights region_weights_from_effects(double top, double mid, double bot) {
    const double t = std::max(0.0, top), m = std::max(0.0, mid), b = std::max(0.0, bot);
    const double sum = t + m + b;
    if (!(sum > 0.0) || !std::isfinite(sum)) throw EstimationError("region_weights", "no positive region effect");
    return RegionWeights::make(t / sum, m / sum, b / sum);
}

inline RegionWeights derive_region_weights(const DvwpxModel& model,
                                           const std::array<std::string_view, kRegionCount>& region_surrogates) {
    std::array<double, kRegionCount> effects{};
    for (std::size_t r = 0; r < kRegionCount; ++r) {
        auto it = std::find(model.surrogate_schema.begin(), model.surrogate_schema.end(), region_surrogates[r]);
        if (it == model.surrogate_schema.end()) {
            throw DomainError("derive_region_weights: surrogate '" + std::string(region_surrogates[r]) +
                              "' not in schema");
        }
        effects[r] = model.estimate.beta(it - model.surrogate_schema.begin());
    }
    return region_weights_from_effects(effects[0], effects[1], effects[2]);
}

}  // namespace wpx::dml
