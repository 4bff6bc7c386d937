#pragma once

// JSON and CSV persistence for configs, fitted models, ranker bundles,
// impression logs and experiment reports. Objects keep insertion order so the
// same value always serializes to the same bytes.

#include <Eigen/Dense>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wpx/bandit/ranker.hpp"
#include "wpx/dml/estimator.hpp"
#include "wpx/harness/experiment.hpp"
#include "wpx/sim/world.hpp"

namespace wpx::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json vec(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Eigen::VectorXd to_vec(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Json mat(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Eigen::MatrixXd to_mat(const Json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != n) throw DomainError("json: covariance must be square");
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw DomainError(std::string(what) + ": expected a JSON object");
    const std::set<std::string> k(known.begin(), known.end());
    for (const auto& [key, _] : j.items())
        if (!k.count(key)) throw DomainError(std::string(what) + ": unknown field '" + key + "'");
}

inline Json weights_json(const RegionWeights& w) { return Json{{"top", w.top}, {"mid", w.mid}, {"bot", w.bot}}; }

inline RegionWeights weights_from(const Json& j) {
    return RegionWeights::make(j.at("top").get<double>(), j.at("mid").get<double>(), j.at("bot").get<double>());
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

inline std::optional<double> optional_double(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

}  // namespace detail

// ---- configs ---------------------------------------------------------------

inline Json to_json(const sim::WorldConfig& c) {
    return Json{{"n_customers", c.n_customers},
                {"n_queries", c.n_queries},
                {"n_zips", c.n_zips},
                {"n_brands", c.n_brands},
                {"n_templates", c.n_templates},
                {"true_region_effects", c.true_region_effects},
                {"short_term_carry", c.short_term_carry},
                {"engagement_carry", c.engagement_carry},
                {"fixed_effect_scales", c.fixed_effect_scales},
                {"noise_scale", c.noise_scale},
                {"position_bias_decay", c.position_bias_decay},
                {"widget_attention_multiplier", c.widget_attention_multiplier},
                {"seed", c.seed},
                {"items_per_query", c.items_per_query},
                {"widget_items_per_query", c.widget_items_per_query},
                {"page_size", c.page_size},
                {"widget_size", c.widget_size},
                {"widget_pixel_area", c.widget_pixel_area},
                {"item_availability", c.item_availability},
                {"template_eligibility", c.template_eligibility},
                {"appeal_range", c.appeal_range},
                {"price_log_mean", c.price_log_mean},
                {"price_log_sd", c.price_log_sd},
                {"brand_match_boost", c.brand_match_boost},
                {"purchase_rate", c.purchase_rate},
                {"desktop_share", c.desktop_share},
                {"membership_rate", c.membership_rate},
                {"spend_propensity_scale", c.spend_propensity_scale},
                {"query_tilt", c.query_tilt},
                {"brand_share_fe_correlation", c.brand_share_fe_correlation},
                {"long_term_base", c.long_term_base},
                {"history_effects", c.history_effects}};
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline sim::WorldConfig world_config_from_json(const Json& j) {
    sim::WorldConfig c;
    detail::reject_unknown(j, {"n_customers", "n_queries", "n_zips", "n_brands", "n_templates", "true_region_effects",
                               "short_term_carry", "engagement_carry", "fixed_effect_scales", "noise_scale",
                               "position_bias_decay", "widget_attention_multiplier", "seed", "items_per_query",
                               "widget_items_per_query", "page_size", "widget_size", "widget_pixel_area",
                               "item_availability", "template_eligibility", "appeal_range", "price_log_mean",
                               "price_log_sd", "brand_match_boost", "purchase_rate", "desktop_share",
                               "membership_rate", "spend_propensity_scale", "query_tilt",
                               "brand_share_fe_correlation", "long_term_base", "history_effects"},
                           "world config");
    using detail::read_opt;
    read_opt(j, "n_customers", c.n_customers);
    read_opt(j, "n_queries", c.n_queries);
    read_opt(j, "n_zips", c.n_zips);
    read_opt(j, "n_brands", c.n_brands);
    read_opt(j, "n_templates", c.n_templates);
    read_opt(j, "true_region_effects", c.true_region_effects);
    read_opt(j, "short_term_carry", c.short_term_carry);
    read_opt(j, "engagement_carry", c.engagement_carry);
    read_opt(j, "fixed_effect_scales", c.fixed_effect_scales);
    read_opt(j, "noise_scale", c.noise_scale);
    read_opt(j, "position_bias_decay", c.position_bias_decay);
    read_opt(j, "widget_attention_multiplier", c.widget_attention_multiplier);
    read_opt(j, "seed", c.seed);
    read_opt(j, "items_per_query", c.items_per_query);
    read_opt(j, "widget_items_per_query", c.widget_items_per_query);
    read_opt(j, "page_size", c.page_size);
    read_opt(j, "widget_size", c.widget_size);
    read_opt(j, "widget_pixel_area", c.widget_pixel_area);
    read_opt(j, "item_availability", c.item_availability);
    read_opt(j, "template_eligibility", c.template_eligibility);
    read_opt(j, "appeal_range", c.appeal_range);
    read_opt(j, "price_log_mean", c.price_log_mean);
    read_opt(j, "price_log_sd", c.price_log_sd);
    read_opt(j, "brand_match_boost", c.brand_match_boost);
    read_opt(j, "purchase_rate", c.purchase_rate);
    read_opt(j, "desktop_share", c.desktop_share);
    read_opt(j, "membership_rate", c.membership_rate);
    read_opt(j, "spend_propensity_scale", c.spend_propensity_scale);
    read_opt(j, "query_tilt", c.query_tilt);
    read_opt(j, "brand_share_fe_correlation", c.brand_share_fe_correlation);
    read_opt(j, "long_term_base", c.long_term_base);
    read_opt(j, "history_effects", c.history_effects);
    c.validate();
    return c;
}

inline Json to_json(const harness::ArmConfig& a) {
    return Json{{"name", a.name},
                {"satisfaction_mode", harness::to_string(a.satisfaction_mode)},
                {"reward_weights", a.reward_weights}};
}

inline harness::ArmConfig arm_config_from_json(const Json& j) {
    detail::reject_unknown(j, {"name", "satisfaction_mode", "reward_weights"}, "arm config");
    harness::ArmConfig a;
    a.name = j.at("name").get<std::string>();
    a.satisfaction_mode = harness::parse_satisfaction_mode(j.at("satisfaction_mode").get<std::string>());
    a.reward_weights = a.satisfaction_mode == harness::SatisfactionMode::None
                           ? std::array<double, kObjectiveCount>{0.5, 0.2, 0.0}
                           : std::array<double, kObjectiveCount>{0.5, 0.2, 0.3};
    detail::read_opt(j, "reward_weights", a.reward_weights);
    return a;
}

inline Json to_json(const harness::ExperimentConfig& c) {
    Json arms = Json::array();
    for (const auto& a : c.arms) arms.push_back(to_json(a));
    return Json{{"world", to_json(c.world)},
                {"arms", arms},
                {"days", c.days},
                {"sessions_per_day", c.sessions_per_day},
                {"warmup_days", c.warmup_days},
                {"seed", c.seed},
                {"dvwpx_panel_events", c.dvwpx_panel_events},
                {"stage2", dml::to_string(c.stage2)},
                {"bootstrap_n", c.bootstrap_n},
                {"holdout_fraction", c.holdout_fraction},
                {"retrain_fraction", c.retrain_fraction},
                {"reestimate_ctr_weights", c.reestimate_ctr_weights}};
}

inline harness::ExperimentConfig experiment_config_from_json(const Json& j) {
    detail::reject_unknown(j, {"world", "arms", "days", "sessions_per_day", "warmup_days", "seed",
                               "dvwpx_panel_events", "stage2", "bootstrap_n", "holdout_fraction", "retrain_fraction",
                               "reestimate_ctr_weights"},
                           "experiment config");
    harness::ExperimentConfig c;
    if (auto it = j.find("world"); it != j.end()) c.world = world_config_from_json(*it);
    if (auto it = j.find("arms"); it != j.end()) {
        c.arms.clear();
        for (const auto& a : *it) c.arms.push_back(arm_config_from_json(a));
    }
    using detail::read_opt;
    read_opt(j, "days", c.days);
    read_opt(j, "sessions_per_day", c.sessions_per_day);
    read_opt(j, "warmup_days", c.warmup_days);
    read_opt(j, "seed", c.seed);
    read_opt(j, "dvwpx_panel_events", c.dvwpx_panel_events);
    if (auto it = j.find("stage2"); it != j.end()) c.stage2 = dml::parse_stage2(it->get<std::string>());
    read_opt(j, "bootstrap_n", c.bootstrap_n);
    read_opt(j, "holdout_fraction", c.holdout_fraction);
    read_opt(j, "retrain_fraction", c.retrain_fraction);
    read_opt(j, "reestimate_ctr_weights", c.reestimate_ctr_weights);
    c.validate();
    return c;
}

// ---- DV-WPX model ------------------------------------------------------------

inline Json to_json(const dml::DvwpxModel& m) {
    const auto& e = m.estimate;
    const auto& d = e.diagnostics;
    return Json{{"surrogates", m.surrogate_schema},
                {"short_term_metrics", m.panel_schema.m_names},
                {"history", m.panel_schema.h_names},
                {"beta", detail::vec(e.beta)},
                {"stderr_beta", detail::vec(e.stderr_beta)},
                {"theta", detail::vec(e.theta)},
                {"gamma", detail::vec(e.gamma)},
                {"lambda", detail::optional_json(e.lambda_selected)},
                {"horizon", Json{{"delta_short_days", m.horizon.delta_short_days},
                                 {"delta_long_days", m.horizon.delta_long_days}}},
                {"config", Json{{"deaverage_iterations", m.config.deaverage_iterations},
                                {"train_fraction", m.config.train_fraction},
                                {"crossfit_folds", m.config.crossfit_folds},
                                {"stage2", dml::to_string(m.config.stage2)},
                                {"lasso_grid_points", m.config.lasso_grid_points},
                                {"lasso_cv_folds", m.config.lasso_cv_folds},
                                {"seed", m.config.seed}}},
                {"diagnostics", Json{{"n_train", d.n_train},
                                     {"n_test", d.n_test},
                                     {"max_group_mean_query", d.max_group_mean_query},
                                     {"max_group_mean_zip", d.max_group_mean_zip},
                                     {"deaverage_iterations_run", d.deaverage_iterations_run},
                                     {"stage1_fold_rmse", d.stage1_fold_rmse},
                                     {"stage2_train_rmse", d.stage2_train_rmse},
                                     {"test_rmse", d.test_rmse},
                                     {"ridge_fallback", d.ridge_fallback}}}};
}

// ---- ranker bundle -----------------------------------------------------------

inline Json to_json(const bandit::ObjectiveModel& m) {
    Json j{{"kind", m.kind == bandit::ModelKind::Linear ? "linear" : "probit"},
           {"diagonal", m.posterior.diagonal},
           {"mean", detail::vec(m.posterior.mean)}};
    if (m.posterior.diagonal) {
        j["variance"] = detail::vec(m.posterior.covariance.diagonal());
    } else {
        j["covariance"] = detail::mat(m.posterior.covariance);
        j["precision"] = detail::mat(m.precision);
        j["information"] = detail::vec(m.information);
    }
    if (m.kind == bandit::ModelKind::Linear) j["noise_variance"] = m.noise_variance;
    return j;
}

inline bandit::ObjectiveModel objective_model_from_json(const Json& j, const std::vector<std::string>& schema) {
    bandit::ObjectiveModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "linear" && kind != "probit") throw DomainError("bundle: unknown model kind '" + kind + "'");
    m.kind = kind == "linear" ? bandit::ModelKind::Linear : bandit::ModelKind::Probit;
    m.feature_schema = schema;
    m.posterior.diagonal = j.at("diagonal").get<bool>();
    m.posterior.mean = detail::to_vec(j.at("mean"));
    if (static_cast<std::size_t>(m.posterior.mean.size()) != schema.size())
        throw DomainError("bundle: model dimension does not match feature schema");
    if (m.posterior.diagonal) {
        const Eigen::VectorXd var = detail::to_vec(j.at("variance"));
        if (var.size() != m.posterior.mean.size()) throw DomainError("bundle: variance length mismatch");
        m.posterior.covariance = var.asDiagonal();
    } else {
        m.precision = detail::to_mat(j.at("precision"));
        m.information = detail::to_vec(j.at("information"));
        if (m.precision.rows() != m.posterior.mean.size() || m.information.size() != m.posterior.mean.size())
            throw DomainError("bundle: precision shape mismatch");
        bandit::detail::refresh_moments(m);
    }
    if (m.kind == bandit::ModelKind::Linear) m.noise_variance = j.at("noise_variance").get<double>();
    if (!m.posterior.valid()) throw DomainError("bundle: posterior is not symmetric positive definite");
    return m;
}

inline Json to_json(const bandit::RankerBundle& b) {
    Json templates = Json::array();
    for (auto t : b.schema.templates()) templates.push_back(t.value);
    Json stats = Json::object();
    for (std::size_t i = 0; i < kObjectiveCount; ++i) {
        stats[std::string(to_string(static_cast<Objective>(i)))] =
            Json{{"weight", b.reward_weights.weight[i]},
                 {"mean", b.reward_weights.stats[i].mean},
                 {"std", b.reward_weights.stats[i].std}};
    }
    Json models{{"revenue", to_json(b.revenue)}, {"non_abandonment", to_json(b.non_abandonment)}};
    if (b.satisfaction) models["satisfaction"] = to_json(*b.satisfaction);
    return Json{{"schema_version", bandit::RankerBundle::kSchemaVersion},
                {"templates", templates},
                {"features", b.schema.names()},
                {"reward", stats},
                {"region_weights", b.region_weights ? detail::weights_json(*b.region_weights) : Json(nullptr)},
                {"models", models}};
}

inline bandit::RankerBundle bundle_from_json(const Json& j) {
    detail::reject_unknown(j, {"schema_version", "templates", "features", "reward", "region_weights", "models"}, "bundle");
    if (j.at("schema_version").get<int>() != bandit::RankerBundle::kSchemaVersion)
        throw DomainError("bundle: unsupported schema version");
    bandit::RankerBundle b;
    std::vector<TemplateId> templates;
    for (const auto& t : j.at("templates")) templates.emplace_back(t.get<std::uint32_t>());
    b.schema = bandit::FeatureSchema(std::move(templates));
    if (j.at("features").get<std::vector<std::string>>() != b.schema.names())
        throw DomainError("bundle: feature names do not match this build's feature schema");
    const auto& reward = j.at("reward");
    for (std::size_t i = 0; i < kObjectiveCount; ++i) {
        const auto& r = reward.at(std::string(to_string(static_cast<Objective>(i))));
        b.reward_weights.weight[i] = r.at("weight").get<double>();
        b.reward_weights.stats[i] = {r.at("mean").get<double>(), r.at("std").get<double>()};
    }
    if (const auto& rw = j.at("region_weights"); !rw.is_null()) b.region_weights = detail::weights_from(rw);
    const auto& models = j.at("models");
    b.revenue = objective_model_from_json(models.at("revenue"), b.schema.names());
    b.non_abandonment = objective_model_from_json(models.at("non_abandonment"), b.schema.names());
    if (auto it = models.find("satisfaction"); it != models.end())
        b.satisfaction = objective_model_from_json(*it, b.schema.names());
    b.validate();
    return b;
}

// ---- layouts, contexts, impressions --------------------------------------------

inline Json to_json(const PageLayout& l) {
    Json slots = Json::array();
    for (const auto& s : l.slots) {
        slots.push_back(Json{{"position", s.position},
                             {"kind", to_string(s.content_kind)},
                             {"item_id", s.item.item_id.value},
                             {"brand_id", s.item.brand_id.value},
                             {"base_appeal", s.item.base_appeal},
                             {"price", s.item.price},
                             {"pixel_area", s.pixel_area}});
    }
    return Json{{"template_id", l.template_id.value}, {"slots", slots}};
}

inline PageLayout layout_from_json(const Json& j) {
    PageLayout l;
    l.template_id = TemplateId(j.at("template_id").get<std::uint32_t>());
    for (const auto& s : j.at("slots")) {
        Slot slot;
        slot.position = s.at("position").get<int>();
        const auto kind = s.at("kind").get<std::string>();
        if (kind != "organic" && kind != "widget") throw DomainError("layout: unknown slot kind '" + kind + "'");
        slot.content_kind = kind == "widget" ? ContentKind::Widget : ContentKind::Organic;
        slot.item.item_id = ItemId(s.at("item_id").get<std::uint32_t>());
        slot.item.brand_id = BrandId(s.at("brand_id").get<std::uint32_t>());
        slot.item.base_appeal = s.value("base_appeal", 0.0);
        slot.item.price = s.value("price", 1.0);
        slot.pixel_area = s.value("pixel_area", 1.0);
        l.slots.push_back(slot);
    }
    return l;
}

inline Json context_json(const ContextFeatures& c) {
    Json j{{"device", to_string(c.device)},
           {"query_specificity", c.query_specificity},
           {"category_id", c.category_id},
           {"membership", c.membership}};
    if (!c.content_signals.empty()) j["content_signals"] = c.content_signals;
    return j;
}

inline ContextFeatures context_from_json(const Json& j) {
    ContextFeatures c;
    const auto device = j.at("device").get<std::string>();
    if (device != "desktop" && device != "mobile") throw DomainError("context: device must be desktop or mobile");
    c.device = device == "desktop" ? Device::Desktop : Device::Mobile;
    c.query_specificity = j.at("query_specificity").get<double>();
    c.category_id = j.value("category_id", 0u);
    c.membership = j.at("membership").get<bool>();
    if (auto it = j.find("content_signals"); it != j.end())
        c.content_signals = it->get<std::vector<std::vector<double>>>();
    return c;
}

/// Ranking request: context, query brand and candidate layouts.
struct RankRequest {
    ContextFeatures context;
    BrandId query_brand;
    std::vector<PageLayout> candidates;
};

inline Json to_json(const RankRequest& r) {
    Json cands = Json::array();
    for (const auto& c : r.candidates) cands.push_back(to_json(c));
    ContextFeatures bare = r.context;
    bare.content_signals.clear();
    return Json{{"context", context_json(bare)}, {"query_brand", r.query_brand.value}, {"candidates", cands}};
}

/// Content signals are recomputed from the candidates.
inline RankRequest rank_request_from_json(const Json& j) {
    RankRequest r;
    r.context = context_from_json(j.at("context"));
    r.query_brand = BrandId(j.at("query_brand").get<std::uint32_t>());
    for (const auto& c : j.at("candidates")) r.candidates.push_back(layout_from_json(c));
    bandit::attach_content_signals(r.context, r.candidates, r.query_brand);
    return r;
}

inline Json to_json(const bandit::ImpressionRecord& r) {
    return Json{{"ts", Json{{"day", r.day}, {"event_id", r.event_id}}},
                {"available_day", r.available_day},
                {"context", context_json(r.context)},
                {"template_id", r.template_id.value},
                {"targets", Json{{"revenue", r.revenue},
                                 {"non_abandonment", r.non_abandonment},
                                 {"region_bmr", r.region_bmr}}}};
}

inline bandit::ImpressionRecord impression_from_json(const Json& j) {
    bandit::ImpressionRecord r;
    r.day = j.at("ts").at("day").get<int>();
    r.event_id = j.at("ts").at("event_id").get<std::uint64_t>();
    r.available_day = j.at("available_day").get<int>();
    r.context = context_from_json(j.at("context"));
    r.template_id = TemplateId(j.at("template_id").get<std::uint32_t>());
    const auto& t = j.at("targets");
    r.revenue = t.at("revenue").get<double>();
    r.non_abandonment = t.at("non_abandonment").get<bool>();
    r.region_bmr = t.at("region_bmr").get<std::array<double, kRegionCount>>();
    return r;
}

inline void write_jsonl(std::ostream& os, const std::vector<bandit::ImpressionRecord>& log) {
    for (const auto& r : log) os << to_json(r).dump() << '\n';
}

inline std::vector<bandit::ImpressionRecord> read_jsonl(std::istream& is) {
    std::vector<bandit::ImpressionRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(impression_from_json(Json::parse(line)));
    }
    return out;
}

// ---- experiment report -------------------------------------------------------

inline Json to_json(const harness::OfflineEvalResult& r) {
    Json metrics = Json::array();
    for (const auto& m : r.metrics) {
        metrics.push_back(Json{{"segment", m.segment},
                               {"objective", m.objective},
                               {"metric", m.metric},
                               {"value", m.value},
                               {"n", m.n}});
    }
    return Json{{"metrics", metrics}, {"warnings", r.warnings}};
}

inline Json to_json(const harness::ExperimentReport& r) {
    Json arms = Json::array();
    for (const auto& a : r.arms) {
        arms.push_back(Json{{"name", a.name},
                            {"satisfaction_mode", harness::to_string(a.satisfaction_mode)},
                            {"reward_weights", a.reward_weights},
                            {"region_weights", a.region_weights ? detail::weights_json(*a.region_weights) : Json(nullptr)},
                            {"sessions", a.sessions},
                            {"revenue", a.revenue},
                            {"long_term_revenue", a.long_term_revenue},
                            {"search_ctr", a.search_ctr},
                            {"pr_wp_bmr", a.pr_wp_bmr_ctr},
                            {"pr_wp_bmr_dvwpx", detail::optional_json(a.pr_wp_bmr_dvwpx)},
                            {"template_share", a.template_share},
                            {"offline", to_json(a.offline)}});
    }
    Json lifts = Json::array();
    for (const auto& l : r.lifts) {
        for (const auto& row : l.rows) {
            Json j{{"arm", l.arm},
                   {"control", l.control},
                   {"metric", row.metric},
                   {"control_mean", row.control_mean},
                   {"treatment_mean", row.treatment_mean},
                   {"lift", detail::optional_json(row.lift)},
                   {"ci_low", detail::optional_json(row.ci_low)},
                   {"ci_high", detail::optional_json(row.ci_high)}};
            if (!row.error.empty()) j["error"] = row.error;
            lifts.push_back(std::move(j));
        }
    }
    Json daily = Json::array();
    for (const auto& d : r.daily) {
        daily.push_back(Json{{"day", d.day},
                             {"arm", d.arm},
                             {"sessions", d.sessions},
                             {"revenue", d.revenue},
                             {"long_term_revenue", d.long_term_revenue},
                             {"search_ctr", d.search_ctr},
                             {"pr_wp_bmr", d.pr_wp_bmr_ctr}});
    }
    Json dv = nullptr;
    if (r.dvwpx) {
        dv = Json{{"panel_events", r.dvwpx->panel_events},
                  {"stage2", dml::to_string(r.dvwpx->stage2)},
                  {"surrogates", r.dvwpx->surrogates},
                  {"beta", r.dvwpx->beta},
                  {"stderr_beta", r.dvwpx->stderr_beta},
                  {"lambda", detail::optional_json(r.dvwpx->lambda)},
                  {"weights", detail::weights_json(r.dvwpx->weights)}};
    }
    return Json{{"config", to_json(r.config)},
                {"ctr_weights", detail::weights_json(r.ctr_weights)},
                {"dvwpx", dv},
                {"arms", arms},
                {"lifts", lifts},
                {"daily", daily},
                {"warnings", r.warnings}};
}

inline harness::ExperimentReport report_from_json(const Json& j) {
    harness::ExperimentReport r;
    r.config = experiment_config_from_json(j.at("config"));
    r.ctr_weights = detail::weights_from(j.at("ctr_weights"));
    if (const auto& dv = j.at("dvwpx"); !dv.is_null()) {
        harness::DvwpxSummary d;
        d.panel_events = dv.at("panel_events").get<std::size_t>();
        d.stage2 = dml::parse_stage2(dv.at("stage2").get<std::string>());
        d.surrogates = dv.at("surrogates").get<std::vector<std::string>>();
        d.beta = dv.at("beta").get<std::vector<double>>();
        d.stderr_beta = dv.at("stderr_beta").get<std::vector<double>>();
        d.lambda = detail::optional_double(dv, "lambda");
        d.weights = detail::weights_from(dv.at("weights"));
        r.dvwpx = d;
    }
    for (const auto& a : j.at("arms")) {
        harness::ArmSummary s;
        s.name = a.at("name").get<std::string>();
        s.satisfaction_mode = harness::parse_satisfaction_mode(a.at("satisfaction_mode").get<std::string>());
        s.reward_weights = a.at("reward_weights").get<std::array<double, kObjectiveCount>>();
        if (const auto& rw = a.at("region_weights"); !rw.is_null()) s.region_weights = detail::weights_from(rw);
        s.sessions = a.at("sessions").get<std::size_t>();
        s.revenue = a.at("revenue").get<double>();
        s.long_term_revenue = a.at("long_term_revenue").get<double>();
        s.search_ctr = a.at("search_ctr").get<double>();
        s.pr_wp_bmr_ctr = a.at("pr_wp_bmr").get<double>();
        s.pr_wp_bmr_dvwpx = detail::optional_double(a, "pr_wp_bmr_dvwpx");
        s.template_share = a.at("template_share").get<std::vector<double>>();
        for (const auto& m : a.at("offline").at("metrics")) {
            s.offline.metrics.push_back({m.at("segment").get<std::string>(), m.at("objective").get<std::string>(),
                                         m.at("metric").get<std::string>(), m.at("value").get<double>(),
                                         m.at("n").get<std::size_t>()});
        }
        s.offline.warnings = a.at("offline").at("warnings").get<std::vector<std::string>>();
        r.arms.push_back(std::move(s));
    }
    for (const auto& l : j.at("lifts")) {
        const auto arm = l.at("arm").get<std::string>();
        if (r.lifts.empty() || r.lifts.back().arm != arm) r.lifts.push_back({arm, l.at("control").get<std::string>(), {}});
        harness::LiftRow row;
        row.metric = l.at("metric").get<std::string>();
        row.control_mean = l.at("control_mean").get<double>();
        row.treatment_mean = l.at("treatment_mean").get<double>();
        row.lift = detail::optional_double(l, "lift");
        row.ci_low = detail::optional_double(l, "ci_low");
        row.ci_high = detail::optional_double(l, "ci_high");
        row.error = l.value("error", "");
        r.lifts.back().rows.push_back(std::move(row));
    }
    for (const auto& d : j.at("daily")) {
        r.daily.push_back({d.at("day").get<int>(), d.at("arm").get<std::string>(), d.at("sessions").get<std::size_t>(),
                           d.at("revenue").get<double>(), d.at("long_term_revenue").get<double>(),
                           d.at("search_ctr").get<double>(), d.at("pr_wp_bmr").get<double>()});
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

inline void write_daily_csv(std::ostream& os, const harness::ExperimentReport& r) {
    os << "day,arm,sessions,revenue,long_term_revenue,search_ctr,pr_wp_bmr\n";
    for (const auto& d : r.daily) {
        std::string line = std::to_string(d.day) + "," + d.arm + "," + std::to_string(d.sessions);
        for (double v : {d.revenue, d.long_term_revenue, d.search_ctr, d.pr_wp_bmr_ctr}) {
            line += ',';
            dml::detail::append_double(line, v);
        }
        os << line << '\n';
    }
}

// ---- files -------------------------------------------------------------------

inline Json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("cannot open " + path);
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        throw DomainError(path + ": " + e.what());
    }
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot open " + path + " for writing");
    os << text;
}

inline void save_json(const std::string& path, const Json& j) { save_text(path, j.dump(2) + "\n"); }

}  // namespace wpx::io
