#pragma once

// Linear learners used by the estimator: OLS with classical standard errors,
// the ridge residualizer for cross-fitting, and coordinate-descent LASSO with
// a cross-validated penalty grid.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "wpx/error.hpp"
#include "wpx/rng.hpp"

namespace wpx::dml {

struct OlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd stderr_beta;
    double residual_variance = 0.0;
};

/// Least squares without intercept. Rank-deficient designs are rejected rather
/// than silently pseudo-inverted.
inline OlsResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n) throw DomainError("ols_fit: X and y row counts differ");
    if (p == 0) throw DomainError("ols_fit: no columns");
    if (n <= p) throw DomainError("ols_fit: need more rows than columns");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("ols_fit: non-finite input");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw RankDeficientError("design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p) +
                                 " columns");
    }
    OlsResult out;
    out.beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * out.beta;
    out.residual_variance = std::max(0.0, resid.squaredNorm() / static_cast<double>(n - p));

    // (X'X)^-1 = P R^-1 R^-T P' from the pivoted QR.
    const auto R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv = R.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
    Eigen::MatrixXd xtx_inv = qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();
    out.stderr_beta = (out.residual_variance * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();
    return out;
}

/// Least squares on standardized features with an unpenalized intercept. When
/// the Gram matrix is singular or badly conditioned the fit falls back to ridge
/// with `fallback_penalty`. Fits several outcomes against one factorization.
class RidgeModel {
public:
    static constexpr double kMinRcond = 1e-12;

    static RidgeModel fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& outcomes, double fallback_penalty) {
        const Eigen::Index n = features.rows();
        if (n == 0 || outcomes.rows() != n) throw DomainError("ridge: bad shapes");
        RidgeModel m;
        m.feature_mean_ = features.colwise().mean();
        m.outcome_mean_ = outcomes.colwise().mean();
        Eigen::MatrixXd z = features.rowwise() - m.feature_mean_.transpose();
        m.feature_scale_ = (z.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
        std::vector<Eigen::Index> constant;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (m.feature_scale_(j) > 0.0) {
                z.col(j) /= m.feature_scale_(j);
            } else {
                z.col(j).setZero();  // constant column carries no signal
                constant.push_back(j);
            }
        }
        const Eigen::MatrixXd yc = outcomes.rowwise() - m.outcome_mean_.transpose();
        Eigen::MatrixXd gram = z.transpose() * z;
        for (auto j : constant) gram(j, j) = 1.0;  // pins the zero column's coefficient at 0
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > kMinRcond)) {
            gram.diagonal().array() += std::max(fallback_penalty, 1e-12);
            ldlt.compute(gram);
            m.regularized_fallback_ = true;
        }
        m.coef_std_ = ldlt.solve(z.transpose() * yc);
        return m;
    }

    Eigen::MatrixXd predict(const Eigen::MatrixXd& features) const {
        Eigen::MatrixXd z = features.rowwise() - feature_mean_.transpose();
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (feature_scale_(j) > 0.0) {
                z.col(j) /= feature_scale_(j);
            } else {
                z.col(j).setZero();
            }
        }
        return (z * coef_std_).rowwise() + outcome_mean_.transpose();
    }

    bool used_fallback() const { return regularized_fallback_; }

private:
    Eigen::VectorXd feature_mean_, feature_scale_, outcome_mean_;
    Eigen::MatrixXd coef_std_;
    bool regularized_fallback_ = false;
};

// ---------------------------------------------------------------------------
// LASSO: minimize (1/2n)||y - Z b||^2 + lambda ||b||_1 over columns Z_j = X_j / s_j
// with s_j the column root-mean-square. Reported coefficients are b_j / s_j, so on
// the original scale the penalty reads lambda * sum_j s_j |beta_j|. No intercept:
// the estimator feeds residualized data.

struct LassoOptions {
    double tolerance = 1e-10;  // max change of a standardized coefficient per sweep
    int max_sweeps = 10000;
};

struct LassoResult {
    Eigen::VectorXd beta;
    int sweeps = 0;
    bool converged = false;
};

inline Eigen::VectorXd lasso_column_scales(const Eigen::MatrixXd& X) {
    return (X.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt().transpose();
}

namespace detail {

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// Covariance-update coordinate descent on the standardized Gram system.
/// `b` is both the warm start and the output (standardized scale).
inline LassoResult lasso_cd(const Eigen::MatrixXd& gram, const Eigen::VectorXd& zty, const Eigen::VectorXd& active,
                            double lambda, Eigen::VectorXd b, const LassoOptions& opt) {
    const Eigen::Index p = gram.rows();
    LassoResult out;
    Eigen::VectorXd gb = gram * b;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (active(j) == 0.0) continue;
            const double old = b(j);
            const double rho = zty(j) - gb(j) + gram(j, j) * old;
            const double updated = soft_threshold(rho, lambda) / gram(j, j);
            const double delta = updated - old;
            if (delta != 0.0) {
                b(j) = updated;
                gb += gram.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        out.sweeps = sweep + 1;
        if (max_change < opt.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.beta = std::move(b);
    return out;
}

struct LassoSystem {
    Eigen::MatrixXd gram;
    Eigen::VectorXd zty;
    Eigen::VectorXd scale;
    Eigen::VectorXd active;
};

inline LassoSystem lasso_system(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    LassoSystem s;
    const double n = static_cast<double>(X.rows());
    s.scale = lasso_column_scales(X);
    s.active = (s.scale.array() > 0.0).cast<double>();
    Eigen::MatrixXd z = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (s.active(j) != 0.0) z.col(j) /= s.scale(j);
    }
    s.gram = z.transpose() * z / n;
    s.zty = z.transpose() * y / n;
    return s;
}

inline Eigen::VectorXd to_original_scale(const Eigen::VectorXd& b, const LassoSystem& s) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (s.active(j) != 0.0) beta(j) = b(j) / s.scale(j);
    }
    return beta;
}

inline double lambda_max(const LassoSystem& s) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < s.zty.size(); ++j)
        if (s.active(j) != 0.0) best = std::max(best, std::abs(s.zty(j)));
    return best;
}

}  // namespace detail

/// Smallest penalty at which every coefficient is exactly zero.
inline double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return detail::lambda_max(detail::lasso_system(X, y));
}

inline LassoResult lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                             const LassoOptions& options = {}) {
    if (X.rows() != y.size()) throw DomainError("lasso_fit: X and y row counts differ");
    if (X.rows() == 0 || X.cols() == 0) throw DomainError("lasso_fit: empty design");
    if (!X.allFinite() || !y.allFinite() || !std::isfinite(lambda)) throw DomainError("lasso_fit: non-finite input");
    if (lambda < 0.0) throw DomainError("lasso_fit: lambda must be >= 0");
    const auto sys = detail::lasso_system(X, y);
    // At or above lambda_max the solution is exactly zero; the relative slack
    // absorbs rounding between equivalent ways of standardizing the columns.
    if (lambda >= detail::lambda_max(sys) * (1.0 - 1e-12)) return {Eigen::VectorXd::Zero(X.cols()), 0, true};
    auto res = detail::lasso_cd(sys.gram, sys.zty, sys.active, lambda, Eigen::VectorXd::Zero(X.cols()), options);
    res.beta = detail::to_original_scale(res.beta, sys);
    return res;
}

struct LassoCvResult {
    double lambda_star = 0.0;
    Eigen::VectorXd beta;
    std::vector<double> grid;      // descending
    std::vector<double> cv_error;  // mean out-of-fold squared error per grid point
};

/// Penalty chosen on a log-spaced grid over [1e-4 * lambda_max, lambda_max] by
/// k-fold cross-validation; equal errors resolve toward the larger penalty.
inline LassoCvResult lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int grid_points, int folds,
                              std::uint64_t seed, const LassoOptions& options = {}) {
    const Eigen::Index n = X.rows();
    if (grid_points < 2) throw DomainError("lasso_cv: need at least 2 grid points");
    if (folds < 2 || n < folds) throw DomainError("lasso_cv: need folds >= 2 and at least one row per fold");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("lasso_cv: non-finite input");
    const double y_mean = y.mean();
    if ((y.array() - y_mean).square().sum() <= 0.0) throw EstimationError("lasso_cv", "degenerate target (zero variance)");

    const double lmax = lasso_lambda_max(X, y);
    LassoCvResult out;
    out.grid.resize(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        const double t = static_cast<double>(g) / static_cast<double>(grid_points - 1);
        out.grid[static_cast<std::size_t>(g)] = lmax * std::pow(1e-4, t);
    }

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, Stream::Folds, {static_cast<std::uint64_t>(folds)});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

    std::vector<double> sse(out.grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const Eigen::MatrixXd xtr = X(train, Eigen::all);
        const Eigen::VectorXd ytr = y(train);
        const Eigen::MatrixXd xte = X(test, Eigen::all);
        const Eigen::VectorXd yte = y(test);
        const auto sys = detail::lasso_system(xtr, ytr);
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
        for (std::size_t g = 0; g < out.grid.size(); ++g) {
            auto res = detail::lasso_cd(sys.gram, sys.zty, sys.active, out.grid[g], warm, options);
            warm = res.beta;
            const Eigen::VectorXd beta = detail::to_original_scale(res.beta, sys);
            sse[g] += (yte - xte * beta).squaredNorm();
        }
    }
    out.cv_error.resize(sse.size());
    std::size_t best = 0;
    for (std::size_t g = 0; g < sse.size(); ++g) {
        out.cv_error[g] = sse[g] / static_cast<double>(n);
        if (out.cv_error[g] < out.cv_error[best]) best = g;  // strict: ties keep the larger lambda
    }
    out.lambda_star = out.grid[best];
    out.beta = lasso_fit(X, y, out.lambda_star, options).beta;
    return out;
}

}  // namespace wpx::dml
