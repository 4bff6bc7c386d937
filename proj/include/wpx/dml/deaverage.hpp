#pragma once

// Iterative de-averaging: absorb additive query-group and ZIP fixed effects by
// alternately subtracting group means, without materializing dummy columns.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "wpx/dml/panel.hpp"
#include "wpx/error.hpp"

namespace wpx::dml {

struct GroupIndex {
    std::vector<int> group_of_row;
    int group_count = 0;
};

inline GroupIndex index_groups(const std::vector<std::string>& keys) {
    GroupIndex idx;
    idx.group_of_row.reserve(keys.size());
    std::unordered_map<std::string, int> ids;
    for (const auto& k : keys) {
        if (k.empty()) throw DomainError("deaverage: missing group key");
        auto [it, inserted] = ids.try_emplace(k, idx.group_count);
        if (inserted) ++idx.group_count;
        idx.group_of_row.push_back(it->second);
    }
    return idx;
}

inline GroupIndex index_groups(const std::vector<int>& ids) {
    GroupIndex idx;
    idx.group_of_row = ids;
    for (int g : ids) {
        if (g < 0) throw DomainError("deaverage: negative group id");
        idx.group_count = std::max(idx.group_count, g + 1);
    }
    return idx;
}

/// Largest |mean| of any column within any group.
inline double max_abs_group_mean(const Eigen::MatrixXd& values, const GroupIndex& groups) {
    const Eigen::Index n = values.rows();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(groups.group_count, values.cols());
    std::vector<double> counts(static_cast<std::size_t>(groups.group_count), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int g = groups.group_of_row[static_cast<std::size_t>(i)];
        sums.row(g) += values.row(i);
        counts[static_cast<std::size_t>(g)] += 1.0;
    }
    double worst = 0.0;
    for (int g = 0; g < groups.group_count; ++g) {
        if (counts[static_cast<std::size_t>(g)] == 0.0) continue;
        worst = std::max(worst, sums.row(g).cwiseAbs().maxCoeff() / counts[static_cast<std::size_t>(g)]);
    }
    return worst;
}

namespace detail {

inline void subtract_group_means(Eigen::MatrixXd& values, const GroupIndex& groups) {
    const Eigen::Index n = values.rows();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(groups.group_count, values.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(groups.group_count);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int g = groups.group_of_row[static_cast<std::size_t>(i)];
        sums.row(g) += values.row(i);
        counts(g) += 1.0;
    }
    for (int g = 0; g < groups.group_count; ++g) {
        if (counts(g) > 0.0) sums.row(g) /= counts(g);
    }
    for (Eigen::Index i = 0; i < n; ++i) values.row(i) -= sums.row(groups.group_of_row[static_cast<std::size_t>(i)]);
}

}  // namespace detail

struct DeaverageOptions {
    int iterations = 20;
    /// Stop before an iteration once every group mean is already below this.
    double early_stop = 1e-9;
};

struct DeaverageResult {
    Eigen::MatrixXd values;
    double max_group_mean_query = 0.0;
    double max_group_mean_zip = 0.0;
    int iterations_run = 0;
};

inline DeaverageResult deaverage(Eigen::MatrixXd columns, const GroupIndex& query, const GroupIndex& zip,
                                 const DeaverageOptions& options = {}) {
    if (columns.rows() == 0) throw DomainError("deaverage: empty dataset");
    if (options.iterations < 1) throw DomainError("deaverage: iterations must be >= 1");
    const auto n = static_cast<std::size_t>(columns.rows());
    if (query.group_of_row.size() != n || zip.group_of_row.size() != n) {
        throw DomainError("deaverage: every row needs both group keys");
    }

    DeaverageResult out;
    for (int it = 0; it < options.iterations; ++it) {
        if (options.early_stop > 0.0) {
            const double residual = std::max(max_abs_group_mean(columns, query), max_abs_group_mean(columns, zip));
            if (residual < options.early_stop) break;
        }
        detail::subtract_group_means(columns, query);
        detail::subtract_group_means(columns, zip);
        ++out.iterations_run;
    }
    out.max_group_mean_query = max_abs_group_mean(columns, query);
    out.max_group_mean_zip = max_abs_group_mean(columns, zip);
    out.values = std::move(columns);
    return out;
}

/// Numeric panel columns stacked as [drev | X | M | H].
inline Eigen::MatrixXd panel_matrix(const PanelDataset& data) {
    const auto& sc = data.schema;
    const Eigen::Index cols = static_cast<Eigen::Index>(1 + sc.s() + sc.j() + sc.k());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.records[i];
        const auto row = static_cast<Eigen::Index>(i);
        Eigen::Index c = 0;
        m(row, c++) = r.target_drev;
        for (double v : r.surrogates_x) m(row, c++) = v;
        for (double v : r.short_term_m) m(row, c++) = v;
        for (double v : r.history_h) m(row, c++) = v;
    }
    return m;
}

/// Column names matching panel_matrix: "drev", "x_<name>", "m_<name>", "h_<name>".
inline std::vector<std::string> panel_column_names(const PanelSchema& sc) {
    std::vector<std::string> names{"drev"};
    for (const auto& n : sc.x_names) names.push_back("x_" + n);
    for (const auto& n : sc.m_names) names.push_back("m_" + n);
    for (const auto& n : sc.h_names) names.push_back("h_" + n);
    return names;
}

struct PanelDeaverageResult {
    PanelDataset data;
    double max_group_mean_query = 0.0;
    double max_group_mean_zip = 0.0;
    int iterations_run = 0;
};

/// De-averages the named columns (all numeric columns when `columns` is empty)
/// over (query_group, zip) and returns a transformed copy of the panel.
inline PanelDeaverageResult deaverage(const PanelDataset& data, const std::vector<std::string>& columns,
                                      const DeaverageOptions& options = {}) {
    if (data.empty()) throw DomainError("deaverage: empty dataset");
    const auto names = panel_column_names(data.schema);
    std::vector<Eigen::Index> selected;
    if (columns.empty()) {
        for (std::size_t i = 0; i < names.size(); ++i) selected.push_back(static_cast<Eigen::Index>(i));
    } else {
        for (const auto& c : columns) {
            auto it = std::find(names.begin(), names.end(), c);
            if (it == names.end()) throw DomainError("deaverage: unknown column '" + c + "'");
            selected.push_back(static_cast<Eigen::Index>(it - names.begin()));
        }
    }
    std::vector<std::string> q_keys, z_keys;
    q_keys.reserve(data.size());
    z_keys.reserve(data.size());
    for (const auto& r : data.records) {
        q_keys.push_back(r.query_group);
        z_keys.push_back(r.zip);
    }
    const GroupIndex q = index_groups(q_keys);
    const GroupIndex z = index_groups(z_keys);

    const Eigen::MatrixXd full = panel_matrix(data);
    Eigen::MatrixXd sub(full.rows(), static_cast<Eigen::Index>(selected.size()));
    for (std::size_t c = 0; c < selected.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = full.col(selected[c]);
    auto res = deaverage(std::move(sub), q, z, options);

    PanelDeaverageResult out{data, res.max_group_mean_query, res.max_group_mean_zip, res.iterations_run};
    const auto& sc = data.schema;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto& r = out.data.records[i];
        for (std::size_t c = 0; c < selected.size(); ++c) {
            const double v = res.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            auto col = static_cast<std::size_t>(selected[c]);
            if (col == 0) {
                r.target_drev = v;
                continue;
            }
            col -= 1;
            if (col < sc.s()) {
                r.surrogates_x[col] = v;
                continue;
            }
            col -= sc.s();
            if (col < sc.j()) {
                r.short_term_m[col] = v;
                continue;
            }
            r.history_h[col - sc.j()] = v;
        }
    }
    return out;
}

}  // namespace wpx::dml
