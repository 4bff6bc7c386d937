#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "wpx/dml/regression.hpp"
#include "wpx/error.hpp"
#include "wpx/rng.hpp"

namespace wpx::dml {

/// Ridge penalty for ill-conditioned stage-1 fits, as a multiple of the row count.
inline constexpr double kStage1RidgeFactor = 1e-6;

struct CrossfitResult {
    Eigen::MatrixXd residuals;  // rows x outcomes, out-of-fold
    std::vector<int> fold_of_row;
    /// model_training_folds[f] lists the folds the model that scored fold f was fit on.
    std::vector<std::vector<int>> model_training_folds;
    /// fold_rmse(f, c): RMSE of outcome c's residuals on fold f.
    Eigen::MatrixXd fold_rmse;
    bool ridge_fallback = false;
};

inline std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, Stream::Folds, {static_cast<std::uint64_t>(folds), n});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fold_of;
}

/// For each outcome column, out-of-fold residuals from a linear model on
/// `features` fit on the complementary folds.
inline CrossfitResult crossfit_residualize(const Eigen::MatrixXd& outcomes, const Eigen::MatrixXd& features, int folds,
                                           std::uint64_t seed) {
    const Eigen::Index n = outcomes.rows();
    if (folds < 2) throw DomainError("crossfit: folds must be >= 2");
    if (features.rows() != n) throw DomainError("crossfit: outcome and feature row counts differ");
    if (n < 2 * folds) throw DomainError("crossfit: too few rows for the fold count");
    if (!outcomes.allFinite() || !features.allFinite()) throw DomainError("crossfit: non-finite input");

    CrossfitResult out;
    out.fold_of_row = assign_folds(static_cast<std::size_t>(n), folds, seed);
    out.residuals.resize(n, outcomes.cols());
    out.fold_rmse.resize(folds, outcomes.cols());
    out.model_training_folds.resize(static_cast<std::size_t>(folds));

    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, held;
        for (Eigen::Index i = 0; i < n; ++i) (out.fold_of_row[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
        for (int g = 0; g < folds; ++g)
            if (g != f) out.model_training_folds[static_cast<std::size_t>(f)].push_back(g);

        const double penalty = kStage1RidgeFactor * static_cast<double>(train.size());
        const auto model = RidgeModel::fit(features(train, Eigen::all),
                                           outcomes(train, Eigen::all), penalty);
        out.ridge_fallback = out.ridge_fallback || model.used_fallback();
        const Eigen::MatrixXd pred = model.predict(features(held, Eigen::all));
        const Eigen::MatrixXd res = outcomes(held, Eigen::all) - pred;
        for (std::size_t r = 0; r < held.size(); ++r) out.residuals.row(held[r]) = res.row(static_cast<Eigen::Index>(r));
        out.fold_rmse.row(f) = (res.colwise().squaredNorm() / static_cast<double>(held.size())).cwiseSqrt();
    }
    return out;
}

}  // namespace wpx::dml
