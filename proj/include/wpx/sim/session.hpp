#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "wpx/bandit/features.hpp"
#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"
#include "wpx/sim/world.hpp"

namespace wpx::sim {

/// A search request plus the supply-side state it sees.
struct Event {
    std::uint64_t event_id = 0;
    int day = 0;
    std::size_t customer = 0;
    std::size_t query = 0;
    int zip = 0;
    Device device = Device::Mobile;
    std::vector<bool> available;                 // per organic item, then per widget item
    std::vector<bool> template_eligible;         // per template in the pool
};

/// Samples the customer's query with probability proportional to
/// exp(tilt * propensity * standardized brand share).
inline std::size_t choose_query(const World& w, const Customer& c, Rng& rng) {
    const double a = w.config.query_tilt * c.propensity;
    std::vector<double> cdf(w.queries.size());
    double total = 0.0;
    for (std::size_t q = 0; q < cdf.size(); ++q) {
        total += std::exp(a * w.query_tilt_score[q]);
        cdf[q] = total;
    }
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

inline Event draw_event(const World& w, std::uint64_t event_id, int day) {
    const auto& cfg = w.config;
    Rng rng = Rng::stream(cfg.seed, Stream::Event, {event_id});
    Event e;
    e.event_id = event_id;
    e.day = day;
    e.customer = rng.below(w.customers.size());
    const Customer& c = w.customers[e.customer];
    e.zip = c.zip;
    e.query = choose_query(w, c, rng);
    e.device = rng.bernoulli(cfg.desktop_share) ? Device::Desktop : Device::Mobile;

    const auto& q = w.queries[e.query];
    const std::size_t n_items = q.items.size() + q.widget_items.size();
    e.available.resize(n_items);
    int n_avail = 0;
    for (std::size_t i = 0; i < n_items; ++i) {
        e.available[i] = rng.bernoulli(cfg.item_availability);
        if (i < q.items.size()) n_avail += e.available[i] ? 1 : 0;
    }
    // Keep at least a full page of organic results in stock.
    for (std::size_t i = 0; i < q.items.size() && n_avail < cfg.page_size; ++i) {
        if (!e.available[i]) {
            e.available[i] = true;
            ++n_avail;
        }
    }
    e.template_eligible.resize(w.templates.size());
    for (std::size_t t = 0; t < w.templates.size(); ++t) {
        const bool organic_only = w.templates[t].eligible_item_filter == ItemFilter::Any;
        e.template_eligible[t] = organic_only || rng.bernoulli(cfg.template_eligibility);
    }
    return e;
}

/// Fills the template: widget slots take the most appealing available widget
/// items that pass the template's filter, organic slots take organic results
/// by appeal. Empty if stock is short.
inline std::optional<PageLayout> build_layout(const World& w, const Event& e, const PageTemplate& tmpl) {
    const auto& q = w.queries[e.query];
    std::vector<std::size_t> organic, widget_pool;
    for (std::size_t i = 0; i < q.items.size(); ++i)
        if (e.available[i]) organic.push_back(q.items[i]);
    for (std::size_t i = 0; i < q.widget_items.size(); ++i)
        if (e.available[q.items.size() + i]) widget_pool.push_back(q.widget_items[i]);
    auto by_appeal = [&](std::size_t a, std::size_t b) {
        const auto& ia = w.catalog[a];
        const auto& ib = w.catalog[b];
        if (ia.base_appeal != ib.base_appeal) return ia.base_appeal > ib.base_appeal;
        return ia.item_id < ib.item_id;
    };
    std::sort(organic.begin(), organic.end(), by_appeal);
    std::sort(widget_pool.begin(), widget_pool.end(), by_appeal);

    std::size_t n_widget = 0;
    for (const auto& s : tmpl.slot_plan) n_widget += s.content_kind == ContentKind::Widget ? 1 : 0;
    const std::size_t n_organic = tmpl.slot_plan.size() - n_widget;

    std::vector<std::size_t> widget;
    for (auto idx : widget_pool) {
        if (widget.size() == n_widget) break;
        if (tmpl.eligible_item_filter == ItemFilter::Any || w.catalog[idx].brand_id == q.brand) widget.push_back(idx);
    }
    if (widget.size() < n_widget || organic.size() < n_organic) return std::nullopt;

    PageLayout layout;
    layout.template_id = tmpl.template_id;
    std::size_t wi = 0, oi = 0;
    for (std::size_t p = 0; p < tmpl.slot_plan.size(); ++p) {
        const auto& spec = tmpl.slot_plan[p];
        const std::size_t idx = spec.content_kind == ContentKind::Widget ? widget[wi++] : organic[oi++];
        layout.slots.push_back({static_cast<int>(p) + 1, spec.content_kind, w.catalog[idx], spec.pixel_area});
    }
    return layout;
}

/// Layouts of every eligible, constructible template, in template-id order.
inline std::vector<PageLayout> eligible_layouts(const World& w, const Event& e) {
    std::vector<PageLayout> out;
    for (std::size_t t = 0; t < w.templates.size(); ++t) {
        if (!e.template_eligible[t]) continue;
        if (auto l = build_layout(w, e, w.templates[t])) out.push_back(std::move(*l));
    }
    if (out.empty()) throw InvariantViolation("event " + std::to_string(e.event_id) + " has no eligible template");
    return out;
}

inline BrandId query_brand(const World& w, const Event& e) { return w.queries[e.query].brand; }

/// 3Cs context for the event with content signals for each candidate.
inline ContextFeatures context_of(const World& w, const Event& e, std::span<const PageLayout> candidates) {
    ContextFeatures ctx;
    ctx.device = e.device;
    ctx.query_specificity = w.queries[e.query].specificity;
    ctx.category_id = w.queries[e.query].category_id;
    ctx.membership = w.customers[e.customer].membership;
    bandit::attach_content_signals(ctx, candidates, query_brand(w, e));
    return ctx;
}

struct SessionOutcome {
    std::vector<bool> examined;
    std::vector<bool> clicks;
    std::vector<double> purchases;  // amount per slot, 0 when no purchase
    bool non_abandonment = false;
    double short_term_revenue = 0.0;
    double engagement_a = 0.0;

    int click_count() const { return static_cast<int>(std::count(clicks.begin(), clicks.end(), true)); }
};

struct LongTermOutcome {
    double long_term_revenue = 0.0;
};

inline double examination_probability(const WorldConfig& cfg, const Slot& s) {
    double p = std::pow(cfg.position_bias_decay, s.position - 1);
    if (s.content_kind == ContentKind::Widget) p *= cfg.widget_attention_multiplier;
    return std::min(1.0, p);
}

inline double click_probability(const WorldConfig& cfg, const Slot& s, BrandId query_brand) {
    const double boost = brand_match(s.item, query_brand) ? cfg.brand_match_boost : 1.0;
    return std::min(1.0, s.item.base_appeal * boost);
}

/// Cascade-free click model. Each item draws from its own stream keyed by item
/// id, so the same item gets the same uniforms under every layout.
inline SessionOutcome simulate_session(const World& w, const Event& e, const PageLayout& layout, Rng rng) {
    const auto& cfg = w.config;
    const BrandId brand = query_brand(w, e);
    const double spend = w.customers[e.customer].spend_multiplier;
    SessionOutcome out;
    const std::size_t n = layout.slots.size();
    out.examined.assign(n, false);
    out.clicks.assign(n, false);
    out.purchases.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Slot& s = layout.slots[i];
        Rng r = rng.split(s.item.item_id.value);
        const double u_exam = r.uniform();
        const double u_click = r.uniform();
        const double u_buy = r.uniform();
        out.examined[i] = u_exam < examination_probability(cfg, s);
        out.clicks[i] = out.examined[i] && u_click < click_probability(cfg, s, brand);
        if (out.clicks[i] && u_buy < cfg.purchase_rate) {
            out.purchases[i] = s.item.price * spend;
            out.short_term_revenue += out.purchases[i];
        }
    }
    out.engagement_a = out.click_count();
    out.non_abandonment = out.engagement_a > 0.0;
    return out;
}

inline SessionOutcome simulate_session(const World& w, const Event& e, const PageLayout& layout) {
    return simulate_session(w, e, layout, Rng::stream(w.config.seed, Stream::Session, {e.event_id}));
}

/// Welfare function evaluated on the displayed page.
inline LongTermOutcome realize_long_term(const World& w, const Event& e, const PageLayout& layout,
                                         const SessionOutcome& session, Rng rng) {
    const auto& cfg = w.config;
    const auto bmr = region_bmrs(brand_match_page(layout, query_brand(w, e)));
    const auto& h = w.customers[e.customer].history;
    double v = cfg.long_term_base + cfg.short_term_carry * session.short_term_revenue +
               cfg.engagement_carry * session.engagement_a;
    for (std::size_t r = 0; r < kRegionCount; ++r) v += cfg.true_region_effects[r] * bmr[r];
    for (std::size_t k = 0; k < h.size(); ++k) v += cfg.history_effects[k] * h[k];
    v += w.queries[e.query].fixed_effect + w.zip_effects[static_cast<std::size_t>(e.zip)];
    v += cfg.noise_scale * rng.normal();
    return {std::max(0.0, v)};
}

inline LongTermOutcome realize_long_term(const World& w, const Event& e, const PageLayout& layout,
                                         const SessionOutcome& session) {
    return realize_long_term(w, e, layout, session, Rng::stream(w.config.seed, Stream::LongTerm, {e.event_id}));
}

}  // namespace wpx::sim
