#pragma once

// 3Cs feature construction: context (device, query specificity), customer
// (membership) and content signals aggregated separately for organic results
// and widgets.

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/page_metrics.hpp"

namespace wpx::bandit {

/// Per-candidate content aggregates, in this order:
///   organic brand share (top, mid, bot), widget brand share (top, mid, bot),
///   organic relevance, widget relevance.
/// Brand shares are pixel-weighted against the region's total area, so
/// organic + widget share equals the region's brand match rate.
inline constexpr std::size_t kContentSignalCount = 8;

inline std::vector<double> content_signals(const PageLayout& layout, BrandId query_brand) {
    std::array<double, kRegionCount> area{}, organic{}, widget{};
    double org_rel = 0.0, wid_rel = 0.0;
    int org_top_n = 0, wid_n = 0;
    for (const Slot& s : layout.slots) {
        const auto r = static_cast<std::size_t>(region_of_position(s.position));
        area[r] += s.pixel_area;
        const bool match = brand_match(s.item, query_brand);
        if (s.content_kind == ContentKind::Organic) {
            if (match) organic[r] += s.pixel_area;
            if (r == 0) {
                org_rel += s.item.base_appeal;
                ++org_top_n;
            }
        } else {
            if (match) widget[r] += s.pixel_area;
            wid_rel += s.item.base_appeal;
            ++wid_n;
        }
    }
    std::vector<double> out;
    out.reserve(kContentSignalCount);
    for (std::size_t r = 0; r < kRegionCount; ++r) out.push_back(area[r] > 0.0 ? organic[r] / area[r] : 0.0);
    for (std::size_t r = 0; r < kRegionCount; ++r) out.push_back(area[r] > 0.0 ? widget[r] / area[r] : 0.0);
    out.push_back(org_top_n > 0 ? org_rel / org_top_n : 0.0);
    out.push_back(wid_n > 0 ? wid_rel / wid_n : 0.0);
    return out;
}

/// Fills `ctx.content_signals` for a candidate list.
inline void attach_content_signals(ContextFeatures& ctx, std::span<const PageLayout> candidates, BrandId query_brand) {
    ctx.content_signals.clear();
    for (const auto& c : candidates) ctx.content_signals.push_back(content_signals(c, query_brand));
}

class FeatureSchema {
public:
    FeatureSchema() = default;

    explicit FeatureSchema(std::vector<TemplateId> template_ids) : templates_(std::move(template_ids)) {
        names_ = {"bias", "device_desktop", "query_specificity", "membership"};
        for (auto id : templates_) names_.push_back("tpl_" + std::to_string(id.value));
        for (const char* n : {"org_brand_top", "org_brand_mid", "org_brand_bot", "wid_brand_top", "wid_brand_mid",
                              "wid_brand_bot", "org_relevance", "wid_relevance"}) {
            names_.emplace_back(n);
        }
    }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<TemplateId>& templates() const { return templates_; }
    std::size_t size() const { return names_.size(); }

    std::vector<double> build(const ContextFeatures& ctx, TemplateId tmpl, std::span<const double> signals) const {
        if (signals.size() != kContentSignalCount) throw DomainError("features: wrong content signal length");
        std::vector<double> f;
        f.reserve(size());
        f.push_back(1.0);
        f.push_back(ctx.device == Device::Desktop ? 1.0 : 0.0);
        f.push_back(ctx.query_specificity);
        f.push_back(ctx.membership ? 1.0 : 0.0);
        bool known = false;
        for (auto id : templates_) {
            f.push_back(id == tmpl ? 1.0 : 0.0);
            known = known || id == tmpl;
        }
        if (!known) throw DomainError("features: template " + std::to_string(tmpl.value) + " not in schema");
        f.insert(f.end(), signals.begin(), signals.end());
        return f;
    }

    bool operator==(const FeatureSchema&) const = default;

private:
    std::vector<TemplateId> templates_;
    std::vector<std::string> names_;
};

}  // namespace wpx::bandit
