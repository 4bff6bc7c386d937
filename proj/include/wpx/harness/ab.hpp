#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wpx/error.hpp"
#include "wpx/rng.hpp"

namespace wpx::harness {

/// Column-major per-session metrics for one arm.
struct MetricLog {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    explicit MetricLog(std::vector<std::string> metric_names = {})
        : names(std::move(metric_names)), columns(names.size()) {}

    std::size_t size() const { return columns.empty() ? 0 : columns.front().size(); }

    void add(std::initializer_list<double> row) {
        if (row.size() != columns.size()) throw DomainError("metric log: row width mismatch");
        std::size_t i = 0;
        for (double v : row) columns[i++].push_back(v);
    }

    double mean(std::size_t metric) const {
        const auto& c = columns.at(metric);
        if (c.empty()) throw DomainError("metric log: empty");
        double s = 0.0;
        for (double v : c) s += v;
        return s / static_cast<double>(c.size());
    }
};

struct LiftRow {
    std::string metric;
    double control_mean = 0.0;
    double treatment_mean = 0.0;
    std::optional<double> lift;  // (treatment - control) / control
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::string error;
};

inline std::optional<double> relative_lift(double control, double treatment) {
    if (control == 0.0) return std::nullopt;
    return (treatment - control) / control;
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DomainError("quantile: empty input");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Relative lifts with percentile bootstrap 95% intervals. Each resample draws
/// sessions with replacement from both arms independently, from its own stream.
inline std::vector<LiftRow> ab_compare(const MetricLog& control, const MetricLog& treatment, int bootstrap_n,
                                       std::uint64_t seed) {
    if (control.names != treatment.names) throw DomainError("ab_compare: metric names differ");
    if (control.size() == 0 || treatment.size() == 0) throw DomainError("ab_compare: empty log");
    if (bootstrap_n < 1) throw DomainError("ab_compare: bootstrap_n must be >= 1");
    const std::size_t m = control.names.size();
    const std::size_t nc = control.size(), nt = treatment.size();

    std::vector<LiftRow> rows(m);
    for (std::size_t k = 0; k < m; ++k) {
        rows[k].metric = control.names[k];
        rows[k].control_mean = control.mean(k);
        rows[k].treatment_mean = treatment.mean(k);
        rows[k].lift = relative_lift(rows[k].control_mean, rows[k].treatment_mean);
        if (!rows[k].lift) rows[k].error = "undefined lift: zero control mean";
    }

    std::vector<std::vector<double>> boot(m);
    std::vector<double> sc(m), st(m);
    for (int b = 0; b < bootstrap_n; ++b) {
        Rng rng = Rng::stream(seed, Stream::Bootstrap, {static_cast<std::uint64_t>(b)});
        std::fill(sc.begin(), sc.end(), 0.0);
        std::fill(st.begin(), st.end(), 0.0);
        for (std::size_t i = 0; i < nc; ++i) {
            const auto r = rng.below(nc);
            for (std::size_t k = 0; k < m; ++k) sc[k] += control.columns[k][r];
        }
        for (std::size_t i = 0; i < nt; ++i) {
            const auto r = rng.below(nt);
            for (std::size_t k = 0; k < m; ++k) st[k] += treatment.columns[k][r];
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (!rows[k].lift) continue;
            if (auto l = relative_lift(sc[k] / static_cast<double>(nc), st[k] / static_cast<double>(nt)))
                boot[k].push_back(*l);
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (boot[k].empty()) continue;
        std::sort(boot[k].begin(), boot[k].end());
        rows[k].ci_low = quantile_sorted(boot[k], 0.025);
        rows[k].ci_high = quantile_sorted(boot[k], 0.975);
    }
    return rows;
}

}  // namespace wpx::harness
