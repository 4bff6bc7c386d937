#pragma once

// Pixel- and region-weighted whole-page brand match rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "wpx/domain.hpp"

namespace wpx {

struct RegionWeights {
    double top = 1.0;
    double mid = 0.0;
    double bot = 0.0;

    static constexpr double kSumTolerance = 1e-12;

    static RegionWeights make(double top, double mid, double bot) {
        RegionWeights w{top, mid, bot};
        w.validate();
        return w;
    }

    /// Click-through-derived weights for (Top, Middle, Bottom).
    static RegionWeights ctr_based() { return make(0.60, 0.25, 0.15); }

    /// Downstream-value weights as published for the production system.
    static RegionWeights published_dvwpx() { return make(0.63, 0.37, 0.0); }

    bool valid() const {
        const bool finite = std::isfinite(top) && std::isfinite(mid) && std::isfinite(bot);
        return finite && top >= 0.0 && mid >= 0.0 && bot >= 0.0 &&
               std::abs(top + mid + bot - 1.0) <= kSumTolerance;
    }

    void validate() const {
        if (!valid()) throw DomainError("RegionWeights: components must be >= 0 and sum to 1");
    }

    double operator[](PageRegion r) const {
        switch (r) {
            case PageRegion::Top: return top;
            case PageRegion::Middle: return mid;
            case PageRegion::Bottom: return bot;
        }
        return 0.0;
    }
};

struct BrandMatchPage {
    struct Entry {
        PageRegion region = PageRegion::Top;
        double pixel_area = 1.0;
        bool match = false;
    };
    std::vector<Entry> slots;
};

inline bool brand_match(const Item& item, BrandId query_brand) { return item.brand_id == query_brand; }

inline BrandMatchPage brand_match_page(const PageLayout& layout, BrandId query_brand) {
    BrandMatchPage page;
    page.slots.reserve(layout.slots.size());
    for (const Slot& s : layout.slots) {
        page.slots.push_back({region_of_position(s.position), s.pixel_area, brand_match(s.item, query_brand)});
    }
    return page;
}

/// Pixel-weighted match rate within one region; an empty region scores 0.
inline double region_bmr(const BrandMatchPage& page, PageRegion region) {
    double matched = 0.0;
    double total = 0.0;
    for (const auto& e : page.slots) {
        if (e.region != region) continue;
        total += e.pixel_area;
        if (e.match) matched += e.pixel_area;
    }
    return total > 0.0 ? matched / total : 0.0;
}

inline std::array<double, kRegionCount> region_bmrs(const BrandMatchPage& page) {
    std::array<double, kRegionCount> matched{};
    std::array<double, kRegionCount> total{};
    for (const auto& e : page.slots) {
        const auto r = static_cast<std::size_t>(e.region);
        total[r] += e.pixel_area;
        if (e.match) matched[r] += e.pixel_area;
    }
    std::array<double, kRegionCount> out{};
    for (std::size_t r = 0; r < kRegionCount; ++r) out[r] = total[r] > 0.0 ? matched[r] / total[r] : 0.0;
    return out;
}

inline double pr_wp_bmr(const std::array<double, kRegionCount>& bmrs, const RegionWeights& weights) {
    weights.validate();
    const double v = weights.top * bmrs[0] + weights.mid * bmrs[1] + weights.bot * bmrs[2];
    return std::clamp(v, 0.0, 1.0);  // weight sums carry up to 1e-12 of slack
}

inline double pr_wp_bmr(const BrandMatchPage& page, const RegionWeights& weights) {
    return pr_wp_bmr(region_bmrs(page), weights);
}

}  // namespace wpx
