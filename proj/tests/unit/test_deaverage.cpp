#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "wpx/dml/deaverage.hpp"
#include "wpx/dml/regression.hpp"
#include "wpx/rng.hpp"
#include "../common/oracles.hpp"

using namespace wpx;
using namespace wpx::dml;
using namespace wpx::testing;

TEST(Deaverage, SingleGroupIsDemeaning) {
    Rng rng(1);
    Eigen::MatrixXd v(30, 2);
    for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) << rng.normal(5.0, 2.0), rng.uniform();
    const std::vector<int> one(30, 0);
    const auto r = deaverage(v, index_groups(one), index_groups(one), {1, 0.0});
    const Eigen::MatrixXd expected = v.rowwise() - v.colwise().mean();
    EXPECT_LT((r.values - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(r.max_group_mean_query, 1e-12);
    EXPECT_EQ(r.iterations_run, 1);
}

TEST(Deaverage, ConstantWithinGroupsGivesZero) {
    Rng rng(2);
    std::vector<int> q, z;
    std::vector<double> level(6);
    for (auto& l : level) l = rng.normal(0.0, 10.0);
    Eigen::MatrixXd v(60, 1);
    for (int i = 0; i < 60; ++i) {
        q.push_back(i % 6);
        z.push_back(static_cast<int>(rng.below(4)));
        v(i, 0) = level[static_cast<std::size_t>(i % 6)];
    }
    const auto r = deaverage(v, index_groups(q), index_groups(z));
    EXPECT_LT(r.values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Deaverage, MatchesDummyVariableOls) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = fe_instance(seed);
        const auto a = deaveraged_ols(f);
        const auto b = dummy_ols(f);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-4) << "seed " << seed;
    }
}

TEST(Deaverage, GroupMeansVanishAfterTwentyIterations) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = fe_instance(seed, 200, 20, 20);
        Eigen::MatrixXd cols(f.x.rows(), 3);
        cols << f.y, f.x;
        const auto r = deaverage(cols, index_groups(f.q), index_groups(f.z), {20, 0.0});
        EXPECT_EQ(r.iterations_run, 20);
        EXPECT_LT(std::max(r.max_group_mean_query, r.max_group_mean_zip), 1e-6) << "seed " << seed;
    }
}

TEST(Deaverage, Idempotent) {
    const auto f = fe_instance(4);
    Eigen::MatrixXd cols(f.x.rows(), 3);
    cols << f.y, f.x;
    const auto q = index_groups(f.q);
    const auto z = index_groups(f.z);
    const auto once = deaverage(cols, q, z);
    const auto twice = deaverage(once.values, q, z);
    EXPECT_LT((twice.values - once.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Deaverage, Errors) {
    Eigen::MatrixXd empty(0, 1);
    EXPECT_THROW(deaverage(empty, index_groups(std::vector<int>{}), index_groups(std::vector<int>{})), DomainError);
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(3, 1);
    EXPECT_THROW(deaverage(v, index_groups(std::vector<int>{0, 1}), index_groups(std::vector<int>{0, 0, 0})),
                 DomainError);
    EXPECT_THROW(deaverage(v, index_groups(std::vector<int>{0, 1, 1}), index_groups(std::vector<int>{0, 0, 0}), {0}),
                 DomainError);
    EXPECT_THROW(index_groups(std::vector<std::string>{"a", ""}), DomainError);
}

TEST(Deaverage, PanelColumnsSelectedByName) {
    PanelDataset d;
    d.schema = {{"top"}, {"revenue"}, {"h"}};
    for (int i = 0; i < 8; ++i) {
        d.records.push_back({static_cast<std::uint64_t>(i), "c", "q" + std::to_string(i % 2), "z", double(i),
                             {double(i)}, {1.0}, {2.0}});
    }
    const auto r = deaverage(d, {"drev", "x_top"});
    EXPECT_DOUBLE_EQ(r.data.records[0].target_drev, 0.0 - 3.0);
    EXPECT_DOUBLE_EQ(r.data.records[1].surrogates_x[0], 1.0 - 4.0);
    EXPECT_EQ(r.data.records[0].short_term_m[0], 1.0);
    EXPECT_THROW(deaverage(d, {"x_nope"}), DomainError);
}
