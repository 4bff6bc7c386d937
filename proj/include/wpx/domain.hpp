#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wpx/error.hpp"

namespace wpx {

/// Opaque identifier. The tag keeps item, brand and template ids from being
/// mixed up at compile time.
template <class Tag>
struct Id {
    std::uint32_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) : value(v) {}
    constexpr auto operator<=>(const Id&) const = default;
};

using ItemId = Id<struct ItemTag>;
using BrandId = Id<struct BrandTag>;
using TemplateId = Id<struct TemplateTag>;

enum class PageRegion { Top = 0, Middle = 1, Bottom = 2 };
inline constexpr std::size_t kRegionCount = 3;
inline constexpr std::array<PageRegion, kRegionCount> kAllRegions{
    PageRegion::Top, PageRegion::Middle, PageRegion::Bottom};

enum class ContentKind { Organic, Widget };
enum class Device { Mobile, Desktop };

constexpr std::string_view to_string(PageRegion r) {
    switch (r) {
        case PageRegion::Top: return "top";
        case PageRegion::Middle: return "mid";
        case PageRegion::Bottom: return "bot";
    }
    return "?";
}

constexpr std::string_view to_string(ContentKind k) {
    return k == ContentKind::Organic ? "organic" : "widget";
}

constexpr std::string_view to_string(Device d) {
    return d == Device::Desktop ? "desktop" : "mobile";
}

struct Item {
    ItemId item_id;
    BrandId brand_id;
    double base_appeal = 0.0;  // latent click propensity, simulator-only
    double price = 1.0;

    bool valid() const { return price > 0.0 && base_appeal >= 0.0 && base_appeal <= 1.0; }
};

/// Last position of the Top region and of the Middle region. Positions count
/// organic and widget items alike in visual order.
inline constexpr int kTopRegionEnd = 8;
inline constexpr int kMiddleRegionEnd = 16;

inline PageRegion region_of_position(int position) {
    if (position < 1) throw DomainError("region_of_position: position must be >= 1");
    if (position <= kTopRegionEnd) return PageRegion::Top;
    if (position <= kMiddleRegionEnd) return PageRegion::Middle;
    return PageRegion::Bottom;
}

struct Slot {
    int position = 1;  // 1-based whole-page ordinal
    ContentKind content_kind = ContentKind::Organic;
    Item item;
    double pixel_area = 1.0;
};

struct SlotSpec {
    ContentKind content_kind = ContentKind::Organic;
    double pixel_area = 1.0;
};

/// Restriction on which items a template may carry (the C_i subset of C).
enum class ItemFilter {
    Any,
    /// Every widget slot on the page carries an item of one shared brand.
    WidgetSingleBrand,
};

struct PageTemplate {
    TemplateId template_id;
    std::string name;
    std::vector<SlotSpec> slot_plan;
    ItemFilter eligible_item_filter = ItemFilter::Any;
};

struct PageLayout {
    TemplateId template_id;
    std::vector<Slot> slots;
};

enum class ViolationKind {
    TemplateMismatch,
    SlotCountMismatch,
    NonContiguous,
    KindMismatch,
    AreaMismatch,
    InvalidItem,
    IneligibleItem,
};

struct LayoutViolation {
    ViolationKind kind;
    std::string message;
};

/// Every invariant violation of `layout` against `tmpl`; empty when the layout conforms.
inline std::vector<LayoutViolation> validate_layout(const PageLayout& layout, const PageTemplate& tmpl) {
    std::vector<LayoutViolation> out;
    auto add = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

    if (layout.template_id != tmpl.template_id) {
        add(ViolationKind::TemplateMismatch,
            "layout template " + std::to_string(layout.template_id.value) + " != template " +
                std::to_string(tmpl.template_id.value));
    }
    if (layout.slots.size() != tmpl.slot_plan.size()) {
        add(ViolationKind::SlotCountMismatch,
            "slot count " + std::to_string(layout.slots.size()) + " != plan length " +
                std::to_string(tmpl.slot_plan.size()));
    }
    for (std::size_t i = 0; i < layout.slots.size(); ++i) {
        const Slot& s = layout.slots[i];
        const int expected = static_cast<int>(i) + 1;
        if (s.position != expected) {
            add(ViolationKind::NonContiguous, "non-contiguous: slot " + std::to_string(i) + " has position " +
                                                  std::to_string(s.position) + ", expected " +
                                                  std::to_string(expected));
        }
        if (!(s.pixel_area > 0.0) || !s.item.valid()) {
            add(ViolationKind::InvalidItem, "invalid slot or item at position " + std::to_string(s.position));
        }
        if (i < tmpl.slot_plan.size()) {
            const SlotSpec& spec = tmpl.slot_plan[i];
            if (spec.content_kind != s.content_kind) {
                add(ViolationKind::KindMismatch, "kind mismatch at position " + std::to_string(s.position) + ": " +
                                                     std::string(to_string(s.content_kind)) + " in " +
                                                     std::string(to_string(spec.content_kind)) + " slot");
            }
            if (spec.pixel_area != s.pixel_area) {
                add(ViolationKind::AreaMismatch, "pixel area mismatch at position " + std::to_string(s.position));
            }
        }
    }
    if (tmpl.eligible_item_filter == ItemFilter::WidgetSingleBrand) {
        const Slot* first = nullptr;
        for (const Slot& s : layout.slots) {
            if (s.content_kind != ContentKind::Widget) continue;
            if (first == nullptr) {
                first = &s;
            } else if (s.item.brand_id != first->item.brand_id) {
                add(ViolationKind::IneligibleItem,
                    "ineligible item " + std::to_string(s.item.item_id.value) + " at position " +
                        std::to_string(s.position) + ": widget brand differs");
            }
        }
    }
    return out;
}

/// delta_short and delta_long in days.
struct HorizonConfig {
    int delta_short_days = 14;
    int delta_long_days = 84;

    void validate() const {
        if (!(0 < delta_short_days && delta_short_days < delta_long_days)) {
            throw DomainError("HorizonConfig: require 0 < delta_short < delta_long");
        }
    }
};

enum class Objective : std::size_t { Revenue = 0, NonAbandonment = 1, Satisfaction = 2 };
inline constexpr std::size_t kObjectiveCount = 3;

constexpr std::string_view to_string(Objective o) {
    switch (o) {
        case Objective::Revenue: return "revenue";
        case Objective::NonAbandonment: return "non_abandonment";
        case Objective::Satisfaction: return "satisfaction";
    }
    return "?";
}

/// Realized per-impression objectives.
struct ObjectiveVector {
    double revenue = 0.0;
    bool non_abandonment = false;
    double satisfaction = 0.0;  // PR-WP-BMR under some region weighting

    bool valid() const { return revenue >= 0.0 && satisfaction >= 0.0 && satisfaction <= 1.0; }
};

/// Request-level 3Cs inputs. `content_signals[i]` describes candidate i.
struct ContextFeatures {
    Device device = Device::Mobile;
    double query_specificity = 0.0;
    std::uint32_t category_id = 0;
    bool membership = false;
    std::vector<std::vector<double>> content_signals;
};

}  // namespace wpx

template <class Tag>
struct std::hash<wpx::Id<Tag>> {
    std::size_t operator()(const wpx::Id<Tag>& id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
