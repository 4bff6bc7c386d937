#pragma once

// Per-objective Bayesian models for the template ranker.
//
// Linear models keep the posterior in information form (precision matrix and
// precision-weighted mean) and refresh mean/covariance from it, so conjugate
// updates commute up to floating-point summation order. Probit models use
// assumed-density filtering on a factorized Gaussian.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wpx/error.hpp"
#include "wpx/rng.hpp"

namespace wpx::bandit {

struct GaussianPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    bool diagonal = false;

    static GaussianPosterior prior(Eigen::Index dim, double variance, bool diagonal) {
        return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim) * variance, diagonal};
    }

    Eigen::Index dim() const { return mean.size(); }

    double min_eigenvalue() const {
        if (diagonal) return covariance.diagonal().minCoeff();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Symmetric (to 1e-12 relative to the largest entry) and positive definite.
    bool valid() const {
        if (covariance.rows() != dim() || covariance.cols() != dim()) return false;
        if (!mean.allFinite() || !covariance.allFinite()) return false;
        const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
        if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
        return min_eigenvalue() > 0.0;
    }
};

enum class ModelKind { Linear, Probit };

struct ObjectiveModel {
    ModelKind kind = ModelKind::Linear;
    GaussianPosterior posterior;
    double noise_variance = 1.0;  // Linear only
    std::vector<std::string> feature_schema;
    // Information form, Linear only: precision = Sigma^-1, information = Sigma^-1 mu.
    Eigen::MatrixXd precision;
    Eigen::VectorXd information;

    Eigen::Index dim() const { return posterior.dim(); }
};

inline constexpr double kPriorVariance = 1.0;
inline constexpr double kNoiseVarianceFloor = 1e-6;

inline ObjectiveModel make_linear_model(std::vector<std::string> schema, double noise_variance = 1.0,
                                        double prior_variance = kPriorVariance) {
    if (!(noise_variance > 0.0) || !(prior_variance > 0.0)) throw DomainError("linear model: variances must be > 0");
    const auto p = static_cast<Eigen::Index>(schema.size());
    ObjectiveModel m;
    m.kind = ModelKind::Linear;
    m.posterior = GaussianPosterior::prior(p, prior_variance, false);
    m.noise_variance = noise_variance;
    m.feature_schema = std::move(schema);
    m.precision = Eigen::MatrixXd::Identity(p, p) / prior_variance;
    m.information = Eigen::VectorXd::Zero(p);
    return m;
}

inline ObjectiveModel make_probit_model(std::vector<std::string> schema, double prior_variance = kPriorVariance) {
    if (!(prior_variance > 0.0)) throw DomainError("probit model: prior variance must be > 0");
    const auto p = static_cast<Eigen::Index>(schema.size());
    ObjectiveModel m;
    m.kind = ModelKind::Probit;
    m.posterior = GaussianPosterior::prior(p, prior_variance, true);
    m.feature_schema = std::move(schema);
    return m;
}

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

inline void check_input(const ObjectiveModel& m, std::span<const double> x, const char* op) {
    if (static_cast<Eigen::Index>(x.size()) != m.dim()) {
        throw DomainError(std::string(op) + ": feature vector has " + std::to_string(x.size()) +
                          " entries, schema has " + std::to_string(m.dim()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw DomainError(std::string(op) + ": non-finite feature");
    }
}

/// Recompute mean and covariance from the information form.
inline void refresh_moments(ObjectiveModel& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m.precision);
    if (llt.info() != Eigen::Success) throw InvariantViolation("linear model: precision lost positive definiteness");
    const auto p = m.precision.rows();
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
    m.posterior.covariance = 0.5 * (cov + cov.transpose());
    m.posterior.mean = llt.solve(m.information);
}

/// phi(z) / Phi(z), stable in the lower tail.
inline double inverse_mills(double z) {
    if (z < -35.0) return -z - 1.0 / z;
    return standard_normal_pdf(z) / standard_normal_cdf(z);
}

}  // namespace detail

/// Conjugate Gaussian update with known noise variance.
inline void blr_update(ObjectiveModel& m, std::span<const double> x, double y) {
    if (m.kind != ModelKind::Linear) throw DomainError("blr_update: model is not linear");
    detail::check_input(m, x, "blr_update");
    if (!std::isfinite(y)) throw DomainError("blr_update: non-finite target");
    const auto xv = detail::as_vector(x);
    ObjectiveModel next = m;
    next.precision.noalias() += xv * xv.transpose() / m.noise_variance;
    next.information += xv * (y / m.noise_variance);
    detail::refresh_moments(next);
    m = std::move(next);
}

/// Batch form of blr_update: same posterior as streaming the rows one at a time,
/// with one moment refresh at the end. Rows of X are feature vectors.
inline void blr_update_batch(ObjectiveModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (m.kind != ModelKind::Linear) throw DomainError("blr_update: model is not linear");
    if (X.rows() != y.size() || (X.rows() > 0 && X.cols() != m.dim())) throw DomainError("blr_update: bad shapes");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("blr_update: non-finite input");
    if (X.rows() == 0) return;
    ObjectiveModel next = m;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        next.precision.noalias() += X.row(i).transpose() * X.row(i) / m.noise_variance;
        next.information += X.row(i).transpose() * (y(i) / m.noise_variance);
    }
    detail::refresh_moments(next);
    m = std::move(next);
}

/// Assumed-density-filtering step for P(label = 1 | w) = Phi(w'x) on a
/// factorized Gaussian posterior.
inline void probit_update(ObjectiveModel& m, std::span<const double> x, bool label) {
    if (m.kind != ModelKind::Probit) throw DomainError("probit_update: model is not probit");
    detail::check_input(m, x, "probit_update");
    const auto xv = detail::as_vector(x);
    const double sign = label ? 1.0 : -1.0;
    Eigen::VectorXd var = m.posterior.covariance.diagonal();
    const double total_var = 1.0 + (xv.array().square() * var.array()).sum();
    const double s = std::sqrt(total_var);
    const double t = sign * m.posterior.mean.dot(xv) / s;
    const double v = detail::inverse_mills(t);
    const double w = v * (v + t);

    Eigen::VectorXd mean = m.posterior.mean.array() + sign * xv.array() * var.array() * (v / s);
    Eigen::VectorXd shrink = 1.0 - xv.array().square() * var.array() * (w / total_var);
    var = var.array() * shrink.array().max(1e-12);
    m.posterior.mean = std::move(mean);
    m.posterior.covariance = var.asDiagonal();
}

inline double linear_predictor_mean(const ObjectiveModel& m, std::span<const double> x) {
    detail::check_input(m, x, "predict");
    return m.posterior.mean.dot(detail::as_vector(x));
}

/// Posterior-mean prediction: w'x for linear models, Phi(w'x) for probit.
inline double predict_mean(const ObjectiveModel& m, std::span<const double> x) {
    const double eta = linear_predictor_mean(m, x);
    return m.kind == ModelKind::Linear ? eta : standard_normal_cdf(eta);
}

/// Draws weight vectors from a fixed posterior snapshot. Factorizes once.
class ThompsonSampler {
public:
    explicit ThompsonSampler(const ObjectiveModel& m) : kind_(m.kind), mean_(m.posterior.mean) {
        const auto& cov = m.posterior.covariance;
        if (m.posterior.diagonal) {
            factor_ = cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            return;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
        } else {
            // Degenerate or numerically semi-definite covariance.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
            factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        }
    }

    Eigen::VectorXd sample_weights(Rng& rng) const {
        Eigen::VectorXd z(mean_.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        return mean_ + factor_ * z;
    }

    double draw(std::span<const double> x, Rng& rng) const {
        if (static_cast<Eigen::Index>(x.size()) != mean_.size()) throw DomainError("thompson: feature size mismatch");
        const double eta = sample_weights(rng).dot(detail::as_vector(x));
        return kind_ == ModelKind::Linear ? eta : standard_normal_cdf(eta);
    }

private:
    ModelKind kind_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd factor_;
};

inline double thompson_sample_predict(const ObjectiveModel& m, std::span<const double> x, Rng& rng) {
    detail::check_input(m, x, "thompson_sample_predict");
    return ThompsonSampler(m).draw(x, rng);
}

}  // namespace wpx::bandit
