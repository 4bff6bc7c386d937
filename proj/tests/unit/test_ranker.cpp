#include <gtest/gtest.h>

#include "../common/bandit_env.hpp"
#include "wpx/bandit/features.hpp"
#include "wpx/bandit/ranker.hpp"
#include "wpx/rng.hpp"

using namespace wpx;
using namespace wpx::bandit;

namespace {

const std::vector<TemplateId> kIds{TemplateId(0), TemplateId(1), TemplateId(2)};

RewardWeights weights(double rev, double na, double sat) {
    RewardWeights w;
    w.weight = {rev, na, sat};
    w.stats = {{{2.0, 1.5}, {0.5, 0.5}, {0.3, 0.2}}};
    return w;
}

ContextFeatures context(Device d, std::size_t candidates) {
    ContextFeatures c;
    c.device = d;
    c.query_specificity = 0.4;
    c.membership = true;
    c.content_signals.assign(candidates, std::vector<double>(kContentSignalCount, 0.1));
    return c;
}

std::vector<PageLayout> layouts(std::initializer_list<std::uint32_t> ids) {
    std::vector<PageLayout> out;
    for (auto id : ids) out.push_back({TemplateId(id), {}});
    return out;
}

ImpressionRecord random_impression(Rng& rng, std::uint64_t id, int day) {
    ImpressionRecord r;
    r.event_id = id;
    r.day = day;
    r.available_day = day;
    r.context = context(rng.bernoulli(0.5) ? Device::Desktop : Device::Mobile, 1);
    r.context.query_specificity = rng.uniform();
    for (auto& v : r.context.content_signals[0]) v = rng.uniform();
    r.template_id = kIds[rng.below(3)];
    r.revenue = rng.bernoulli(0.3) ? rng.uniform(5.0, 50.0) : 0.0;
    r.non_abandonment = rng.bernoulli(0.6);
    r.region_bmr = {rng.uniform(), rng.uniform(), rng.uniform()};
    return r;
}

std::vector<ImpressionRecord> random_log(std::size_t n, std::uint64_t seed, int day = 0) {
    Rng rng(seed);
    std::vector<ImpressionRecord> log;
    for (std::size_t i = 0; i < n; ++i) log.push_back(random_impression(rng, i, day));
    return log;
}

void expect_same_model(const ObjectiveModel& a, const ObjectiveModel& b, double tol) {
    EXPECT_LT((a.posterior.mean - b.posterior.mean).cwiseAbs().maxCoeff(), tol);
    EXPECT_LT((a.posterior.covariance - b.posterior.covariance).cwiseAbs().maxCoeff(), tol);
}

void expect_bitwise_equal(const ObjectiveModel& a, const ObjectiveModel& b) {
    EXPECT_TRUE(a.posterior.mean == b.posterior.mean);
    EXPECT_TRUE(a.posterior.covariance == b.posterior.covariance);
    EXPECT_TRUE(a.precision == b.precision);
    EXPECT_TRUE(a.information == b.information);
    EXPECT_EQ(a.noise_variance, b.noise_variance);
}

}  // namespace

TEST(Features, SchemaLayout) {
    FeatureSchema s(kIds);
    const auto& n = s.names();
    ASSERT_EQ(s.size(), 4 + kIds.size() + kContentSignalCount);
    EXPECT_EQ(n[0], "bias");
    EXPECT_EQ(n[4], "tpl_0");
    auto c = context(Device::Desktop, 1);
    const auto x = s.build(c, TemplateId(2), c.content_signals[0]);
    EXPECT_EQ(x[0], 1.0);
    EXPECT_EQ(x[1], 1.0);
    EXPECT_EQ(x[2], 0.4);
    EXPECT_EQ(x[3], 1.0);
    EXPECT_EQ(x[4], 0.0);
    EXPECT_EQ(x[6], 1.0);
    EXPECT_THROW(s.build(c, TemplateId(7), c.content_signals[0]), DomainError);
    EXPECT_THROW(s.build(c, TemplateId(0), std::vector<double>{1.0}), DomainError);
}

TEST(Features, ContentSignalsOfALayout) {
    PageLayout l{TemplateId(1), {}};
    for (int p = 1; p <= 12; ++p) {
        const bool widget = p >= 5 && p <= 8;
        const std::uint32_t brand = (widget || p == 1) ? 3u : 4u;
        l.slots.push_back({p, widget ? ContentKind::Widget : ContentKind::Organic,
                           Item{ItemId(static_cast<std::uint32_t>(p)), BrandId(brand), 0.1 * (p % 3), 1.0},
                           widget ? 2.0 : 1.0});
    }
    const auto s = content_signals(l, BrandId(3));
    ASSERT_EQ(s.size(), kContentSignalCount);
    // Top: 4 organic (area 1, one match) + 4 widget (area 2, all match), total area 12.
    EXPECT_NEAR(s[0], 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(s[3], 8.0 / 12.0, 1e-15);
    EXPECT_EQ(s[1], 0.0);
    EXPECT_EQ(s[4], 0.0);
    for (double v : s) EXPECT_TRUE(std::isfinite(v));
}

TEST(Scalarize, CenteredValuesScoreZero) {
    RewardWeights one;
    one.weight = {1.0, 0.0, 0.0};
    one.stats[0] = {3.0, 2.0};
    EXPECT_EQ(scalarize({3.0, std::nullopt, std::nullopt}, one), 0.0);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        auto w = weights(rng.normal(), rng.normal(), rng.normal());
        EXPECT_EQ(scalarize({w.stats[0].mean, w.stats[1].mean, w.stats[2].mean}, w), 0.0);
    }
}

TEST(Scalarize, WeightedStandardizedSum) {
    const auto w = weights(0.5, 0.2, 0.3);
    const double expected = 0.5 * (5.0 - 2.0) / 1.5 + 0.2 * (1.0 - 0.5) / 0.5 + 0.3 * (0.1 - 0.3) / 0.2;
    EXPECT_NEAR(scalarize({5.0, 1.0, 0.1}, w), expected, 1e-15);
    EXPECT_NEAR(scalarize({5.0, std::nullopt, 0.1}, w), expected - 0.2, 1e-15);
    auto bad = w;
    bad.stats[1].std = 0.0;
    EXPECT_THROW(scalarize({5.0, 1.0, 0.1}, bad), DomainError);
    EXPECT_THROW(bad.validate(), DomainError);
    auto zero = weights(0, 0, 0);
    EXPECT_THROW(zero.validate(), DomainError);
}

TEST(Scalarize, PositiveRescalingKeepsArgmax) {
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const auto w = weights(rng.normal(), rng.normal(), rng.normal());
        const double c = rng.uniform(0.01, 100.0);
        auto wc = w;
        for (auto& v : wc.weight) v *= c;
        const auto n = 2 + rng.below(6);
        std::size_t best = 0, best_c = 0;
        double top = -INFINITY, top_c = -INFINITY;
        for (std::uint64_t k = 0; k < n; ++k) {
            ObjectiveSamples s{rng.normal(2.0, 2.0), rng.uniform(), rng.uniform()};
            const double a = scalarize(s, w), b = scalarize(s, wc);
            EXPECT_NEAR(b, c * a, 1e-9 * std::max(1.0, std::abs(c * a)));
            if (a > top) top = a, best = k;
            if (b > top_c) top_c = b, best_c = k;
        }
        EXPECT_EQ(best, best_c);
    }
}

TEST(Bundle, ControlHasNoSatisfactionModel) {
    const auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), std::nullopt);
    EXPECT_FALSE(b.satisfaction.has_value());
    EXPECT_EQ(b.reward_weights[Objective::Satisfaction], 0.0);
    const auto t = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    ASSERT_TRUE(t.satisfaction.has_value());
    EXPECT_EQ(t.satisfaction->feature_schema, t.revenue.feature_schema);
    EXPECT_EQ(t.non_abandonment.feature_schema, t.revenue.feature_schema);
    EXPECT_THROW(make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights{0.5, 0.6, 0.0}), DomainError);
}

TEST(Select, SingleCandidate) {
    const auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    Rng rng(3);
    const auto c = layouts({2});
    const auto sel = select_template(context(Device::Desktop, 1), c, b, rng);
    EXPECT_EQ(sel.index, 0u);
    EXPECT_EQ(sel.template_id, TemplateId(2));
    ASSERT_EQ(sel.trace.size(), 1u);
}

TEST(Select, EmptyCandidatesRejected) {
    const auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), std::nullopt);
    Rng rng(3);
    EXPECT_THROW(select_template(context(Device::Mobile, 0), std::vector<PageLayout>{}, b, rng), DomainError);
}

TEST(Select, DominantCandidateWins) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const std::size_t tpl1 = 4 + 1;
    for (ObjectiveModel* m : {&b.revenue, &b.non_abandonment, &*b.satisfaction}) {
        m->posterior.mean.setZero();
        m->posterior.mean(static_cast<Eigen::Index>(tpl1)) = 1.0;
        m->posterior.covariance = Eigen::MatrixXd::Identity(m->dim(), m->dim()) * 1e-8;
    }
    const auto c = layouts({0, 1});
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        if (select_template(context(Device::Desktop, 2), c, b, rng).template_id == TemplateId(1)) ++wins;
    }
    EXPECT_GE(wins, 99);
}

TEST(Select, TiesGoToLowestTemplateId) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    for (ObjectiveModel* m : {&b.revenue, &b.non_abandonment, &*b.satisfaction}) m->posterior.covariance.setZero();
    Rng rng(4);
    const auto c = layouts({2, 0, 1});
    const auto sel = select_template(context(Device::Desktop, 3), c, b, rng);
    EXPECT_EQ(sel.template_id, TemplateId(0));
    EXPECT_EQ(sel.index, 1u);
}

TEST(Select, DeterministicGivenSeed) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const auto log = random_log(300, 5);
    std::vector<std::size_t> rows(log.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    apply_impressions(b, log, rows);
    const auto c = layouts({0, 1, 2});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng r1(seed), r2(seed);
        const auto a = select_template(context(Device::Desktop, 3), c, b, r1);
        const auto d = select_template(context(Device::Desktop, 3), c, b, r2);
        EXPECT_EQ(a.template_id, d.template_id);
        for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].score, d.trace[i].score);
    }
}

TEST(Select, NonAbandonmentOnlyOnDesktop) {
    const auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const auto c = layouts({0, 1});
    Rng rng(6);
    const auto mobile = select_template(context(Device::Mobile, 2), c, b, rng);
    const auto desktop = select_template(context(Device::Desktop, 2), c, b, rng);
    for (const auto& t : mobile.trace) {
        EXPECT_TRUE(t.samples[0].has_value());
        EXPECT_FALSE(t.samples[1].has_value());
        EXPECT_TRUE(t.samples[2].has_value());
    }
    for (const auto& t : desktop.trace) EXPECT_TRUE(t.samples[1].has_value());
    const auto control = make_bundle(kIds, weights(0.5, 0.2, 0.3), std::nullopt);
    for (const auto& t : select_template(context(Device::Desktop, 2), c, control, rng).trace)
        EXPECT_FALSE(t.samples[2].has_value());
}

TEST(Retrain, HalfOfThousandRows) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const auto log = random_log(1000, 7);
    Rng rng(1);
    const auto st = incremental_retrain(b, log, 0.5, rng, 0);
    EXPECT_EQ(st.rows_sampled, 500u);
    EXPECT_EQ(st.revenue_updates, 500u);
    EXPECT_EQ(st.satisfaction_updates, 500u);
    EXPECT_LE(st.non_abandonment_updates, 500u);
    EXPECT_GT(st.non_abandonment_updates, 0u);
    Rng r2(2);
    EXPECT_EQ(sample_retrain_rows(1001, 0.5, r2).size(), 501u);
}

TEST(Retrain, SampledRowsAreDistinct) {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto n = 1 + rng.below(300);
        const auto rows = sample_retrain_rows(n, 0.5, rng);
        EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
        EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
        for (auto r : rows) EXPECT_LT(r, n);
    }
}

TEST(Retrain, EmptyLogLeavesBundleUnchanged) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const auto log = random_log(50, 9);
    Rng rng(1);
    incremental_retrain(b, log, 0.5, rng, 0);
    const auto before = b;
    const auto st = incremental_retrain(b, std::vector<ImpressionRecord>{}, 0.5, rng, 1);
    EXPECT_EQ(st.rows_sampled, 0u);
    expect_bitwise_equal(b.revenue, before.revenue);
    expect_bitwise_equal(*b.satisfaction, *before.satisfaction);
    EXPECT_TRUE(b.non_abandonment.posterior.mean == before.non_abandonment.posterior.mean);
    EXPECT_TRUE(b.non_abandonment.posterior.covariance == before.non_abandonment.posterior.covariance);
}

TEST(Retrain, ConsecutiveDaysComposeLikeOneStream) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    const auto day0 = random_log(400, 10, 0);
    const auto day1 = random_log(300, 11, 1);
    auto oracle = b;

    Rng r0(100), r1(101);
    incremental_retrain(b, day0, 0.5, r0, 0);
    incremental_retrain(b, day1, 0.5, r1, 1);

    // Stream the same sampled rows, in the same order, one update at a time.
    Rng s0(100), s1(101);
    const std::vector<std::pair<const std::vector<ImpressionRecord>*, Rng*>> days{{&day0, &s0}, {&day1, &s1}};
    for (const auto& [log, rng] : days) {
        const auto rows = sample_retrain_rows(log->size(), 0.5, *rng);
        std::vector<double> rev, sat;
        for (const auto& r : *log) {
            rev.push_back(r.revenue);
            sat.push_back(pr_wp_bmr(r.region_bmr, *oracle.region_weights));
        }
        oracle.revenue.noise_variance = target_noise_variance(rev);
        oracle.satisfaction->noise_variance = target_noise_variance(sat);
        for (auto i : rows) {
            const auto& r = (*log)[i];
            const auto x = r.features(oracle.schema);
            blr_update(oracle.revenue, x, r.revenue);
            blr_update(*oracle.satisfaction, x, sat[i]);
            if (r.context.device == Device::Desktop) probit_update(oracle.non_abandonment, x, r.non_abandonment);
        }
    }
    expect_same_model(b.revenue, oracle.revenue, 1e-10);
    expect_same_model(*b.satisfaction, *oracle.satisfaction, 1e-10);
    expect_same_model(b.non_abandonment, oracle.non_abandonment, 1e-10);
}

TEST(Retrain, PosteriorsStayPositiveDefinite) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    for (int day = 0; day < 5; ++day) {
        Rng rng(static_cast<std::uint64_t>(day));
        incremental_retrain(b, random_log(500, 20 + static_cast<std::uint64_t>(day), day), 0.5, rng, day);
        EXPECT_TRUE(b.revenue.posterior.valid());
        EXPECT_TRUE(b.satisfaction->posterior.valid());
        EXPECT_TRUE(b.non_abandonment.posterior.valid());
    }
}

TEST(Retrain, DelayedOutcomesAreRejected) {
    auto b = make_bundle(kIds, weights(0.5, 0.2, 0.3), RegionWeights::ctr_based());
    auto log = random_log(20, 12, 3);
    log[7].available_day = 4;
    const auto before = b;
    Rng rng(1);
    EXPECT_THROW(incremental_retrain(b, log, 0.5, rng, 3), InvariantViolation);
    expect_bitwise_equal(b.revenue, before.revenue);
    log[7].available_day = 3;
    EXPECT_NO_THROW(incremental_retrain(b, log, 0.5, rng, 3));
}

TEST(BanditRegret, BestTemplateDominatesLateRounds) {
    const auto run = wpx::testing::run_stationary_bandit(1);
    EXPECT_GT(run.best_rate_tail, 0.9);
}
