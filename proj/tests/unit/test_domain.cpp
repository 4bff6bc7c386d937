#include <gtest/gtest.h>

#include <set>

#include "wpx/domain.hpp"
#include "wpx/rng.hpp"

using namespace wpx;

namespace {

PageTemplate two_slot_template() {
    return {TemplateId(3), "t", {{ContentKind::Organic, 1.0}, {ContentKind::Widget, 2.0}}, ItemFilter::Any};
}

Item item(std::uint32_t id, std::uint32_t brand = 0) { return {ItemId(id), BrandId(brand), 0.1, 5.0}; }

PageLayout conforming_layout() {
    PageLayout l;
    l.template_id = TemplateId(3);
    l.slots = {{1, ContentKind::Organic, item(1), 1.0}, {2, ContentKind::Widget, item(2), 2.0}};
    return l;
}

bool has(const std::vector<LayoutViolation>& v, ViolationKind k) {
    for (const auto& x : v)
        if (x.kind == k) return true;
    return false;
}

}  // namespace

TEST(Region, Boundaries) {
    EXPECT_EQ(region_of_position(1), PageRegion::Top);
    EXPECT_EQ(region_of_position(8), PageRegion::Top);
    EXPECT_EQ(region_of_position(9), PageRegion::Middle);
    EXPECT_EQ(region_of_position(16), PageRegion::Middle);
    EXPECT_EQ(region_of_position(17), PageRegion::Bottom);
    EXPECT_EQ(region_of_position(1000), PageRegion::Bottom);
}

TEST(Region, RejectsNonPositivePositions) {
    EXPECT_THROW(region_of_position(0), DomainError);
    EXPECT_THROW(region_of_position(-3), DomainError);
}

TEST(Region, PiecewiseConstantWithBreaksAtNineAndSeventeen) {
    std::vector<int> breaks;
    for (int p = 2; p <= 200; ++p)
        if (region_of_position(p) != region_of_position(p - 1)) breaks.push_back(p);
    EXPECT_EQ(breaks, (std::vector<int>{9, 17}));
}

TEST(Region, ExactlyThreeMembers) {
    std::set<std::string_view> names;
    for (auto r : kAllRegions) names.insert(to_string(r));
    EXPECT_EQ(names.size(), kRegionCount);
    EXPECT_EQ(kRegionCount, 3u);
}

TEST(ValidateLayout, ConformingLayoutIsOk) {
    EXPECT_TRUE(validate_layout(conforming_layout(), two_slot_template()).empty());
}

TEST(ValidateLayout, GapInPositions) {
    auto l = conforming_layout();
    l.slots[1].position = 3;
    const auto v = validate_layout(l, two_slot_template());
    ASSERT_TRUE(has(v, ViolationKind::NonContiguous));
    bool named = false;
    for (const auto& x : v) named = named || x.message.find("non-contiguous") != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(ValidateLayout, WidgetInOrganicSlot) {
    auto l = conforming_layout();
    l.slots[0].content_kind = ContentKind::Widget;
    const auto v = validate_layout(l, two_slot_template());
    ASSERT_TRUE(has(v, ViolationKind::KindMismatch));
    bool named = false;
    for (const auto& x : v) named = named || x.message.find("kind mismatch") != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(ValidateLayout, ReportsEveryViolation) {
    auto l = conforming_layout();
    l.template_id = TemplateId(9);
    l.slots[0].content_kind = ContentKind::Widget;
    l.slots[1].position = 5;
    l.slots[1].pixel_area = 7.0;
    const auto v = validate_layout(l, two_slot_template());
    EXPECT_TRUE(has(v, ViolationKind::TemplateMismatch));
    EXPECT_TRUE(has(v, ViolationKind::KindMismatch));
    EXPECT_TRUE(has(v, ViolationKind::NonContiguous));
    EXPECT_TRUE(has(v, ViolationKind::AreaMismatch));
}

TEST(ValidateLayout, InvalidItemsAndSlotCount) {
    auto l = conforming_layout();
    l.slots[0].item.price = 0.0;
    EXPECT_TRUE(has(validate_layout(l, two_slot_template()), ViolationKind::InvalidItem));
    l = conforming_layout();
    l.slots.pop_back();
    EXPECT_TRUE(has(validate_layout(l, two_slot_template()), ViolationKind::SlotCountMismatch));
}

TEST(ValidateLayout, SingleBrandWidgetFilter) {
    PageTemplate t{TemplateId(1), "w", {{ContentKind::Widget, 1.0}, {ContentKind::Widget, 1.0}},
                   ItemFilter::WidgetSingleBrand};
    PageLayout l{TemplateId(1), {{1, ContentKind::Widget, item(1, 4), 1.0}, {2, ContentKind::Widget, item(2, 4), 1.0}}};
    EXPECT_TRUE(validate_layout(l, t).empty());
    l.slots[1].item.brand_id = BrandId(5);
    EXPECT_TRUE(has(validate_layout(l, t), ViolationKind::IneligibleItem));
}

TEST(ValidateLayout, AcceptedLayoutsMatchPlanLength) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        PageTemplate t{TemplateId(0), "r", {}, ItemFilter::Any};
        const auto n = 1 + rng.below(30);
        for (std::uint64_t i = 0; i < n; ++i)
            t.slot_plan.push_back({rng.bernoulli(0.3) ? ContentKind::Widget : ContentKind::Organic, 1.0});
        PageLayout l{TemplateId(0), {}};
        const auto m = 1 + rng.below(30);
        for (std::uint64_t i = 0; i < m; ++i) {
            const auto kind = i < n ? t.slot_plan[i].content_kind : ContentKind::Organic;
            l.slots.push_back({static_cast<int>(i) + 1, kind, item(static_cast<std::uint32_t>(i)), 1.0});
        }
        if (validate_layout(l, t).empty()) {
            EXPECT_EQ(l.slots.size(), t.slot_plan.size());
        }
    }
}

TEST(Horizon, DefaultsAndValidation) {
    HorizonConfig h;
    EXPECT_EQ(h.delta_short_days, 14);
    EXPECT_EQ(h.delta_long_days, 84);
    EXPECT_NO_THROW(h.validate());
    EXPECT_THROW((HorizonConfig{14, 14}.validate()), DomainError);
    EXPECT_THROW((HorizonConfig{0, 84}.validate()), DomainError);
}

TEST(ObjectiveVectorTest, Validity) {
    EXPECT_TRUE((ObjectiveVector{3.0, true, 0.5}.valid()));
    EXPECT_FALSE((ObjectiveVector{-1.0, false, 0.5}.valid()));
    EXPECT_FALSE((ObjectiveVector{1.0, false, 1.5}.valid()));
}

TEST(RngTest, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
    auto s1 = Rng::stream(7, Stream::Session, {1, 2});
    auto s2 = Rng::stream(7, Stream::Session, {1, 2});
    auto s3 = Rng::stream(7, Stream::Session, {2, 1});
    const auto v1 = s1();
    EXPECT_EQ(v1, s2());
    EXPECT_NE(v1, s3());
}

TEST(RngTest, UniformAndBelowRanges) {
    Rng r(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        ASSERT_LT(r.below(7), 7u);
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(RngTest, NormalMoments) {
    Rng r(3);
    double s = 0.0, ss = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        ss += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(ss / n, 1.0, 0.01);
}
