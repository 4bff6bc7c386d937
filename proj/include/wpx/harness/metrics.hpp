#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "wpx/error.hpp"

namespace wpx::harness {

inline double rmse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw DomainError("rmse: length mismatch");
    if (predictions.empty()) throw DomainError("rmse: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predictions.size()));
}

/// Mann-Whitney AUC with tied scores counted as half. O(n log n).
inline double auc(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw DomainError("auc: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos = 0.0, neg = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average 1-based rank of the tie block
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                rank_sum += mid_rank;
                pos += 1.0;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) throw DomainError("auc: need both positive and negative labels");
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace wpx::harness
