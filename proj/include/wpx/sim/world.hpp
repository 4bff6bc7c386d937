#pragma once

// Synthetic marketplace with a planted welfare function. Long-term revenue is
//   base + carry_s * rev_S + carry_a * A + sum_r c_r * BMR_r + gamma'H + alpha_q + zeta_z + eps
// floored at zero. A customer's latent spend propensity correlates with H,
// scales purchase amounts and tilts query choice toward brand-heavy queries,
// whose fixed effects are in turn correlated with their brand share.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/rng.hpp"

namespace wpx::sim {

struct WorldConfig {
    int n_customers = 5000;
    int n_queries = 200;
    int n_zips = 50;
    int n_brands = 30;
    int n_templates = 5;
    std::array<double, kRegionCount> true_region_effects{1.0, 0.6, 0.0};
    double short_term_carry = 0.8;
    double engagement_carry = 0.3;
    std::array<double, 2> fixed_effect_scales{1.0, 0.5};  // sigma_q, sigma_z
    double noise_scale = 0.25;
    double position_bias_decay = 0.8;
    double widget_attention_multiplier = 1.2;
    std::uint64_t seed = 1;

    // Catalog and page shape.
    int items_per_query = 40;
    int widget_items_per_query = 12;  // brand-matched items available to widgets only
    int page_size = 24;
    int widget_size = 4;
    double widget_pixel_area = 1.2;
    double item_availability = 0.85;
    double template_eligibility = 0.5;
    std::array<double, 2> appeal_range{0.04, 0.24};
    double price_log_mean = 3.2;
    double price_log_sd = 0.5;

    // Behaviour.
    double brand_match_boost = 2.0;
    double purchase_rate = 0.3;
    double desktop_share = 0.5;
    double membership_rate = 0.4;
    double spend_propensity_scale = 0.25;  // purchase amount multiplier exp(scale * u)
    double query_tilt = 0.5;                // propensity-driven preference for brand-heavy queries
    double brand_share_fe_correlation = 0.6;

    // Long-term outcome.
    double long_term_base = 20.0;
    std::vector<double> history_effects{0.5, 0.3, -0.2};  // gamma; its length is the history dimension

    std::size_t history_dim() const { return history_effects.size(); }

    void validate() const {
        if (n_customers < 1 || n_queries < 1 || n_zips < 1 || n_brands < 2 || n_templates < 1)
            throw DomainError("WorldConfig: counts must be >= 1 (n_brands >= 2)");
        if (n_templates > 5) throw DomainError("WorldConfig: at most 5 templates in the built-in pool");
        if (!(position_bias_decay > 0.0 && position_bias_decay < 1.0))
            throw DomainError("WorldConfig: position_bias_decay must be in (0,1)");
        if (!(widget_attention_multiplier > 0.0)) throw DomainError("WorldConfig: widget_attention_multiplier must be > 0");
        if (fixed_effect_scales[0] < 0.0 || fixed_effect_scales[1] < 0.0 || noise_scale < 0.0 || price_log_sd < 0.0 ||
            spend_propensity_scale < 0.0 || query_tilt < 0.0 || brand_match_boost < 0.0 || widget_pixel_area <= 0.0)
            throw DomainError("WorldConfig: scales must be >= 0");
        if (page_size < 1 || widget_size < 1 || 2 * widget_size > page_size || items_per_query < page_size ||
            widget_items_per_query < 0)
            throw DomainError("WorldConfig: page shape requires 2*widget_size <= page_size <= items_per_query");
        if (page_size < 24 && n_templates > 3)
            throw DomainError("WorldConfig: bottom-widget templates need page_size >= 24");
        for (double p : {item_availability, template_eligibility, purchase_rate, desktop_share, membership_rate})
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("WorldConfig: probabilities must be in [0,1]");
        if (!(appeal_range[0] >= 0.0 && appeal_range[0] <= appeal_range[1] && appeal_range[1] <= 1.0))
            throw DomainError("WorldConfig: appeal_range must satisfy 0 <= lo <= hi <= 1");
        if (!(std::abs(brand_share_fe_correlation) <= 1.0))
            throw DomainError("WorldConfig: brand_share_fe_correlation must be in [-1,1]");
    }
};

struct Customer {
    std::uint32_t customer_id = 0;
    int zip = 0;
    bool membership = false;
    std::vector<double> history;  // H
    double propensity = 0.0;      // latent, not observed by estimators
    double spend_multiplier = 1.0;
};

struct QueryGroup {
    std::uint32_t query_id = 0;
    BrandId brand;
    double brand_share = 0.0;
    double specificity = 0.0;
    std::uint32_t category_id = 0;
    double fixed_effect = 0.0;  // alpha_q
    std::vector<std::size_t> items;         // organic candidates, indices into World::catalog
    std::vector<std::size_t> widget_items;  // widget candidates, all of the query brand
};

struct World {
    WorldConfig config;
    std::vector<Item> catalog;
    std::vector<Customer> customers;
    std::vector<QueryGroup> queries;
    std::vector<double> zip_effects;  // zeta_z
    std::vector<PageTemplate> templates;
    /// Brand share per query, standardized across queries.
    std::vector<double> query_tilt_score;
};

/// Built-in template pool, in id order:
///   0 organic only; 1 widget at positions 5-8; 2 widget at 9-12;
///   3 widget at 17-20; 4 two widgets at 17-24.
inline std::vector<PageTemplate> make_template_pool(const WorldConfig& c) {
    auto plan = [&](std::vector<int> widget_starts) {
        std::vector<SlotSpec> slots(static_cast<std::size_t>(c.page_size));
        for (int start : widget_starts) {
            for (int p = start; p < start + c.widget_size; ++p) {
                slots[static_cast<std::size_t>(p - 1)] = {ContentKind::Widget, c.widget_pixel_area};
            }
        }
        return slots;
    };
    const int w = c.widget_size;
    std::vector<PageTemplate> pool;
    pool.push_back({TemplateId(0), "organic", plan({}), ItemFilter::Any});
    pool.push_back({TemplateId(1), "widget_top", plan({kTopRegionEnd - w + 1}), ItemFilter::WidgetSingleBrand});
    pool.push_back({TemplateId(2), "widget_mid", plan({kTopRegionEnd + 1}), ItemFilter::WidgetSingleBrand});
    pool.push_back({TemplateId(3), "widget_bot", plan({kMiddleRegionEnd + 1}), ItemFilter::WidgetSingleBrand});
    pool.push_back(
        {TemplateId(4), "widget_bot_double", plan({kMiddleRegionEnd + 1, kMiddleRegionEnd + 1 + w}),
         ItemFilter::WidgetSingleBrand});
    pool.resize(static_cast<std::size_t>(c.n_templates));
    return pool;
}

inline std::vector<TemplateId> template_ids(const World& w) {
    std::vector<TemplateId> ids;
    for (const auto& t : w.templates) ids.push_back(t.template_id);
    return ids;
}

inline World generate_world(const WorldConfig& config) {
    config.validate();
    World w;
    w.config = config;
    w.templates = make_template_pool(config);
    Rng rng = Rng::stream(config.seed, Stream::World);

    const auto [sigma_q, sigma_z] = config.fixed_effect_scales;
    w.zip_effects.resize(static_cast<std::size_t>(config.n_zips));
    for (auto& z : w.zip_effects) z = sigma_z * rng.normal();

    const double rho = config.brand_share_fe_correlation;
    for (int q = 0; q < config.n_queries; ++q) {
        QueryGroup g;
        g.query_id = static_cast<std::uint32_t>(q);
        g.brand = BrandId(static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(config.n_brands))));
        const double zq = rng.normal();
        const double xi = rng.normal();
        g.fixed_effect = sigma_q * zq;
        g.brand_share = std::clamp(0.45 + 0.15 * (rho * zq + std::sqrt(1.0 - rho * rho) * xi), 0.1, 0.85);
        g.specificity = rng.uniform();
        g.category_id = static_cast<std::uint32_t>(rng.below(10));
        for (int i = 0; i < config.items_per_query; ++i) {
            Item it;
            it.item_id = ItemId(static_cast<std::uint32_t>(w.catalog.size()));
            if (rng.bernoulli(g.brand_share)) {
                it.brand_id = g.brand;
            } else {
                auto b = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(config.n_brands - 1)));
                it.brand_id = BrandId(b >= g.brand.value ? b + 1 : b);
            }
            it.base_appeal = rng.uniform(config.appeal_range[0], config.appeal_range[1]);
            it.price = std::exp(config.price_log_mean + config.price_log_sd * rng.normal());
            g.items.push_back(w.catalog.size());
            w.catalog.push_back(it);
        }
        for (int i = 0; i < config.widget_items_per_query; ++i) {
            Item it;
            it.item_id = ItemId(static_cast<std::uint32_t>(w.catalog.size()));
            it.brand_id = g.brand;
            it.base_appeal = rng.uniform(config.appeal_range[0], config.appeal_range[1]);
            it.price = std::exp(config.price_log_mean + config.price_log_sd * rng.normal());
            g.widget_items.push_back(w.catalog.size());
            w.catalog.push_back(it);
        }
        w.queries.push_back(std::move(g));
    }

    // Standardized brand-share score per query, used to tilt query choice.
    double mean = 0.0, var = 0.0;
    for (const auto& g : w.queries) mean += g.brand_share;
    mean /= static_cast<double>(w.queries.size());
    for (const auto& g : w.queries) var += (g.brand_share - mean) * (g.brand_share - mean);
    const double sd = std::sqrt(var / static_cast<double>(w.queries.size()));
    for (const auto& g : w.queries) w.query_tilt_score.push_back(sd > 0.0 ? (g.brand_share - mean) / sd : 0.0);

    const std::size_t K = config.history_dim();
    for (int c = 0; c < config.n_customers; ++c) {
        Customer cu;
        cu.customer_id = static_cast<std::uint32_t>(c);
        cu.zip = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_zips)));
        cu.membership = rng.bernoulli(config.membership_rate);
        cu.history.resize(K);
        for (auto& h : cu.history) h = rng.normal();
        const double h0 = K > 0 ? cu.history[0] : 0.0;
        const double h1 = K > 1 ? cu.history[1] : 0.0;
        cu.propensity = 0.6 * h0 + 0.4 * h1 + 0.7 * rng.normal();
        cu.spend_multiplier = std::exp(config.spend_propensity_scale * cu.propensity);
        w.customers.push_back(std::move(cu));
    }
    return w;
}

}  // namespace wpx::sim
