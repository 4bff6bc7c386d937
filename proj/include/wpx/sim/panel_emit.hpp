#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wpx/dml/panel.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"
#include "wpx/sim/session.hpp"
#include "wpx/sim/world.hpp"

namespace wpx::sim {

/// An event with the page shown and both horizons' outcomes.
struct SimulatedEvent {
    Event event;
    PageLayout layout;
    std::optional<SessionOutcome> session;
    std::optional<LongTermOutcome> long_term;
};

/// Event ids for panel generation start here so they never collide with
/// experiment traffic.
inline constexpr std::uint64_t kPanelEventBase = std::uint64_t{1} << 40;

/// Simulates events whose template is drawn uniformly from the eligible set.
inline std::vector<SimulatedEvent> simulate_randomized_events(const World& w, std::size_t n,
                                                              std::uint64_t first_event_id = kPanelEventBase) {
    std::vector<SimulatedEvent> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SimulatedEvent se;
        se.event = draw_event(w, first_event_id + i, 0);
        auto candidates = eligible_layouts(w, se.event);
        Rng pick = Rng::stream(w.config.seed, Stream::Panel, {se.event.event_id});
        se.layout = std::move(candidates[pick.below(candidates.size())]);
        se.session = simulate_session(w, se.event, se.layout);
        se.long_term = realize_long_term(w, se.event, se.layout, *se.session);
        out.push_back(std::move(se));
    }
    return out;
}

inline dml::PanelSchema simulator_panel_schema(const World& w) {
    dml::PanelSchema s;
    s.x_names = {"top", "mid", "bot"};
    s.m_names = {"revenue", "engagement"};
    const char* known[] = {"spend", "visits", "tenure"};
    for (std::size_t k = 0; k < w.config.history_dim(); ++k)
        s.h_names.push_back(k < 3 ? known[k] : "h" + std::to_string(k));
    return s;
}

inline std::string query_key(std::size_t q) { return "q" + std::to_string(q); }
inline std::string zip_key(int z) { return "z" + std::to_string(z); }

/// One panel row per event: X = region brand-match rates of the shown page,
/// M = (short-term revenue, click count), H = customer history.
inline dml::PanelDataset emit_panel(const World& w, const std::vector<SimulatedEvent>& events) {
    dml::PanelDataset data;
    data.schema = simulator_panel_schema(w);
    data.records.reserve(events.size());
    for (const auto& se : events) {
        if (!se.session || !se.long_term) {
            throw DomainError("emit_panel: event " + std::to_string(se.event.event_id) + " is missing an outcome");
        }
        const auto bmr = region_bmrs(brand_match_page(se.layout, query_brand(w, se.event)));
        const auto& c = w.customers[se.event.customer];
        dml::PanelRecord r;
        r.event_id = se.event.event_id;
        r.customer_id = "c" + std::to_string(c.customer_id);
        r.query_group = query_key(se.event.query);
        r.zip = zip_key(se.event.zip);
        r.target_drev = se.long_term->long_term_revenue;
        r.surrogates_x.assign(bmr.begin(), bmr.end());
        r.short_term_m = {se.session->short_term_revenue, se.session->engagement_a};
        r.history_h = c.history;
        data.records.push_back(std::move(r));
    }
    return data;
}

inline dml::PanelDataset generate_panel(const World& w, std::size_t n_events) {
    return emit_panel(w, simulate_randomized_events(w, n_events));
}

}  // namespace wpx::sim
