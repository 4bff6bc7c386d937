#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wpx/bandit/ranker.hpp"
#include "wpx/harness/metrics.hpp"
#include "wpx/page_metrics.hpp"

namespace wpx::harness {

struct OfflineMetric {
    std::string segment;    // "all", "desktop" or "mobile"
    std::string objective;  // revenue, satisfaction, non_abandonment
    std::string metric;     // rmse or auc
    double value = 0.0;
    std::size_t n = 0;
};

struct OfflineEvalResult {
    std::vector<OfflineMetric> metrics;
    std::vector<std::string> warnings;

    std::optional<double> find(std::string_view segment, std::string_view objective) const {
        for (const auto& m : metrics)
            if (m.segment == segment && m.objective == objective) return m.value;
        return std::nullopt;
    }
};

/// Posterior-mean predictions on held-out impressions, per device segment.
/// Non-abandonment is scored on desktop rows only, as in training.
inline OfflineEvalResult offline_eval(const bandit::RankerBundle& bundle,
                                      std::span<const bandit::ImpressionRecord> test_log) {
    if (test_log.empty()) throw DomainError("offline_eval: empty test log");
    OfflineEvalResult out;
    struct Segment {
        std::string name;
        std::vector<double> rev_pred, rev_true, sat_pred, sat_true, na_score;
        std::vector<bool> na_label;
    };
    std::vector<Segment> segs{{"all"}, {"desktop"}, {"mobile"}};
    for (const auto& r : test_log) {
        const auto x = r.features(bundle.schema);
        const bool desktop = r.context.device == Device::Desktop;
        for (std::size_t s : {std::size_t{0}, desktop ? std::size_t{1} : std::size_t{2}}) {
            auto& g = segs[s];
            g.rev_pred.push_back(bandit::predict_mean(bundle.revenue, x));
            g.rev_true.push_back(r.revenue);
            if (bundle.satisfaction) {
                g.sat_pred.push_back(bandit::predict_mean(*bundle.satisfaction, x));
                g.sat_true.push_back(pr_wp_bmr(r.region_bmr, *bundle.region_weights));
            }
            if (desktop) {
                g.na_score.push_back(bandit::predict_mean(bundle.non_abandonment, x));
                g.na_label.push_back(r.non_abandonment);
            }
        }
    }
    for (const auto& g : segs) {
        if (g.rev_true.empty()) {
            out.warnings.push_back("segment '" + g.name + "' is empty; omitted");
            continue;
        }
        out.metrics.push_back({g.name, "revenue", "rmse", rmse(g.rev_pred, g.rev_true), g.rev_true.size()});
        if (!g.sat_true.empty())
            out.metrics.push_back({g.name, "satisfaction", "rmse", rmse(g.sat_pred, g.sat_true), g.sat_true.size()});
        if (g.na_label.empty()) continue;
        const auto positives = std::count(g.na_label.begin(), g.na_label.end(), true);
        if (positives == 0 || positives == static_cast<std::ptrdiff_t>(g.na_label.size())) {
            out.warnings.push_back("segment '" + g.name + "' has single-class non-abandonment labels; AUC omitted");
            continue;
        }
        out.metrics.push_back({g.name, "non_abandonment", "auc", auc(g.na_score, g.na_label), g.na_label.size()});
    }
    return out;
}

}  // namespace wpx::harness
