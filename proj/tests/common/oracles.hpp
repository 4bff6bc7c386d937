#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "wpx/dml/deaverage.hpp"
#include "wpx/dml/regression.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"

namespace wpx::testing {

using dml::deaverage;
using dml::index_groups;
using dml::ols_fit;

struct FeInstance {
    Eigen::MatrixXd x;  // n x p regressors
    Eigen::VectorXd y;
    std::vector<int> q, z;
    int nq = 0, nz = 0;
};

// Crossed design with fixed effects correlated with the regressors.
inline FeInstance fe_instance(std::uint64_t seed, int n = 200, int nq = 12, int nz = 9) {
    Rng rng(seed);
    FeInstance f;
    f.nq = nq;
    f.nz = nz;
    std::vector<double> aq(static_cast<std::size_t>(nq)), az(static_cast<std::size_t>(nz));
    for (auto& a : aq) a = 2.0 * rng.normal();
    for (auto& a : az) a = rng.normal();
    f.x.resize(n, 2);
    f.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
        const int z = static_cast<int>(rng.below(static_cast<std::uint64_t>(nz)));
        f.q.push_back(q);
        f.z.push_back(z);
        const double x0 = rng.normal() + 0.5 * aq[static_cast<std::size_t>(q)];
        const double x1 = rng.normal() - 0.7 * az[static_cast<std::size_t>(z)];
        f.x(i, 0) = x0;
        f.x(i, 1) = x1;
        f.y(i) = 1.5 * x0 - 0.8 * x1 + aq[static_cast<std::size_t>(q)] + az[static_cast<std::size_t>(z)] + 0.3 * rng.normal();
    }
    return f;
}

// Full dummy-variable regression: y on [x | q dummies | z dummies minus the first].
inline Eigen::VectorXd dummy_ols(const FeInstance& f) {
    const Eigen::Index n = f.x.rows();
    const Eigen::Index p = f.x.cols();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, p + f.nq + f.nz - 1);
    d.leftCols(p) = f.x;
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, p + f.q[static_cast<std::size_t>(i)]) = 1.0;
        const int z = f.z[static_cast<std::size_t>(i)];
        if (z > 0) d(i, p + f.nq + z - 1) = 1.0;
    }
    // Drop dummy columns for groups that never occur.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < d.cols(); ++c)
        if (c < p || d.col(c).sum() > 0.0) keep.push_back(c);
    const Eigen::MatrixXd dk = d(Eigen::all, keep);
    const Eigen::VectorXd b = (dk.transpose() * dk).ldlt().solve(dk.transpose() * f.y);
    return b.head(p);
}

inline Eigen::VectorXd deaveraged_ols(const FeInstance& f, int iterations = 20) {
    Eigen::MatrixXd cols(f.x.rows(), 3);
    cols << f.y, f.x;
    const auto r = deaverage(cols, index_groups(f.q), index_groups(f.z), {iterations, 0.0});
    return ols_fit(r.values.rightCols(2), r.values.col(0)).beta;
}

inline Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, Rng& rng, double scale = 1.0) {
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = scale * rng.normal();
    return m;
}

inline Eigen::VectorXd noise(Eigen::Index n, Rng& rng, double sd) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = sd * rng.normal();
    return v;
}

// Largest violation of the optimality conditions of
// (1/2n)||y - Xb||^2 + lambda * sum_j s_j |b_j|.
inline double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b, double lambda) {
    const double n = static_cast<double>(X.rows());
    const Eigen::VectorXd g = X.transpose() * (y - X * b) / n;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double s = std::sqrt(X.col(j).squaredNorm() / n);
        const double pen = lambda * s;
        if (b(j) != 0.0) {
            worst = std::max(worst, std::abs(g(j) - pen * (b(j) > 0 ? 1.0 : -1.0)));
        } else {
            worst = std::max(worst, std::max(0.0, std::abs(g(j)) - pen));
        }
    }
    return worst;
}

inline double ks_statistic(std::vector<double> draws, double mean, double sd) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = 0.5 * std::erfc(-(draws[i] - mean) / (sd * std::sqrt(2.0)));
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

inline BrandMatchPage random_page(Rng& rng) {
    BrandMatchPage p;
    const auto n = rng.below(40);
    for (std::uint64_t i = 0; i < n; ++i) {
        p.slots.push_back({region_of_position(static_cast<int>(1 + rng.below(30))), rng.uniform(0.1, 5.0),
                           rng.bernoulli(0.5)});
    }
    return p;
}

inline RegionWeights random_weights(Rng& rng) {
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double s = a + b + c;
    a /= s;
    b /= s;
    return RegionWeights::make(a, b, 1.0 - a - b);
}

// Direct evaluation of the weighted sum from per-slot sums.
inline double brute_force(const BrandMatchPage& p, const RegionWeights& w) {
    double out = 0.0;
    for (auto r : kAllRegions) {
        double num = 0.0, den = 0.0;
        for (const auto& e : p.slots) {
            if (e.region != r) continue;
            den += e.pixel_area;
            num += e.match ? e.pixel_area : 0.0;
        }
        out += w[r] * (den > 0.0 ? num / den : 0.0);
    }
    return out;
}

}  // namespace wpx::testing
