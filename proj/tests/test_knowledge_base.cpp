#include "support.hpp"

#include "ehc/knowledge_base.hpp"
#include "ehc/kvtext.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

using namespace ehc;
using namespace ehc::kb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProposedBandTable& table_of(KbProposal& p, VitalKind k) {
    for (auto& t : p.bands) {
        if (t.kind == k) return t;
    }
    throw std::logic_error("no table");
}

TEST(Classify, DefaultExamples) {
    const auto kb = default_knowledge_base();
    EXPECT_EQ(kb.table(VitalKind::BodyTemperature)->classify(37.0), Band::Normal);
    EXPECT_EQ(kb.table(VitalKind::HeartRate)->classify(130), Band::Critical);
    EXPECT_EQ(kb.table(VitalKind::SystolicBP)->classify(140), Band::Warning);  // lower bound inclusive
    EXPECT_EQ(kb.table(VitalKind::SystolicBP)->classify(139.9), Band::Normal);
    EXPECT_EQ(kb.table(VitalKind::HeartRate)->classify(from_x10(kMinValueX10)), Band::Critical);
    EXPECT_EQ(kb.table(VitalKind::HeartRate)->classify(from_x10(kMaxValueX10)), Band::Critical);
}

TEST(Classify, EveryKindHasATable) {
    const auto kb = default_knowledge_base();
    for (auto k : kAllVitalKinds) EXPECT_NE(kb.table(k), nullptr) << to_string(k);
    EXPECT_TRUE(validate_proposal(to_proposal(kb)).empty());
}

TEST(Validate, OverlapIsReportedWithRange) {
    ProposedBandTable t{VitalKind::HeartRate,
                        {{-kInf, 60, Band::Warning}, {55, 100, Band::Normal}, {100, kInf, Band::Critical}}, std::nullopt};
    auto errs = validate_band_table(t);
    ASSERT_EQ(errs.size(), 1u);
    EXPECT_NE(errs[0].find("overlap"), std::string::npos) << errs[0];
    EXPECT_NE(errs[0].find("55"), std::string::npos) << errs[0];
}

TEST(Validate, GapIsReported) {
    ProposedBandTable t{VitalKind::HeartRate,
                        {{-kInf, 55, Band::Warning}, {60, 100, Band::Normal}, {100, kInf, Band::Critical}}, std::nullopt};
    auto errs = validate_band_table(t);
    ASSERT_EQ(errs.size(), 1u);
    EXPECT_NE(errs[0].find("gap"), std::string::npos) << errs[0];
}

TEST(Validate, NonAscendingIsReported) {
    ProposedBandTable t{VitalKind::HeartRate,
                        {{-kInf, 60, Band::Warning}, {60, 60, Band::Normal}, {60, kInf, Band::Critical}}, std::nullopt};
    auto errs = validate_band_table(t);
    ASSERT_FALSE(errs.empty());
    EXPECT_NE(errs[0].find("non-ascending"), std::string::npos) << errs[0];
}

TEST(Validate, MissingEndsAreGaps) {
    ProposedBandTable t{VitalKind::HeartRate, {{0, 100, Band::Normal}}, std::nullopt};
    EXPECT_EQ(validate_band_table(t).size(), 2u);
}

TEST(Validate, BreakpointShapeMismatch) {
    auto t = ProposedBandTable::from_breakpoints(VitalKind::HeartRate, {50, 60}, {Band::Normal, Band::Warning});
    EXPECT_FALSE(validate_band_table(t).empty());
}

TEST(Validate, ProposalListsEveryViolation) {
    auto p = to_proposal(default_knowledge_base());
    table_of(p, VitalKind::HeartRate).intervals[1].lo = 55;  // overlap
    p.bands.erase(std::remove_if(p.bands.begin(), p.bands.end(),
                                 [](const auto& t) { return t.kind == VitalKind::BloodGlucose; }),
                  p.bands.end());
    p.debounce.m_clear = 0;
    p.trends[0].max_abs_delta = 0;
    EXPECT_EQ(validate_proposal(p).size(), 4u);
}

TEST(Update, MovingABreakpointBumpsRevision) {
    const auto kb = default_knowledge_base();
    auto p = to_proposal(kb);
    auto& hr = table_of(p, VitalKind::HeartRate);
    hr.intervals[1].hi = 55;  // Warning [50, 55)
    hr.intervals[2].lo = 55;  // Normal [55, 100)
    auto next = apply_kb_update(kb, p, "dr-who", 1234);
    EXPECT_EQ(next.revision, kb.revision + 1);
    EXPECT_EQ(next.author, "dr-who");
    EXPECT_EQ(next.updated_at, 1234u);
    EXPECT_EQ(next.table(VitalKind::HeartRate)->classify(57), Band::Normal);
    EXPECT_EQ(kb.table(VitalKind::HeartRate)->classify(57), Band::Warning);
}

TEST(Update, RejectedUpdateLeavesKbIdentical) {
    const auto kb = default_knowledge_base();
    const auto before = save_kb(kb);
    auto p = to_proposal(kb);
    table_of(p, VitalKind::HeartRate).intervals[2].lo = 55;  // overlaps Warning [50, 60)
    try {
        apply_kb_update(kb, p, "dr-who", 1);
        FAIL() << "accepted";
    } catch (const ValidationError& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_NE(e.violations()[0].find("HeartRate"), std::string::npos);
    }
    EXPECT_EQ(save_kb(kb), before);
}

TEST(TextFormat, FixtureMatchesDefault) {
    EXPECT_EQ(store::read_file(test::fixture("default_kb.txt")), save_kb(default_knowledge_base()));
    EXPECT_EQ(load_kb(store::read_file(test::fixture("default_kb.txt"))), default_knowledge_base());
}

TEST(TextFormat, RoundTripAfterUpdate) {
    auto p = to_proposal(default_knowledge_base());
    p.debounce = {2, 1, 4};
    p.trends.pop_back();
    auto kb = apply_kb_update(default_knowledge_base(), p, "a b", 99);
    EXPECT_EQ(load_kb(save_kb(kb)), kb);
}

TEST(TextFormat, InvalidDocumentRaisesValidationError) {
    auto text = save_kb(default_knowledge_base());
    const std::string from = "breakpoints = 50, 60, 100, 120";
    text.replace(text.find(from), from.size(), "breakpoints = 50, 60, 100, 90");
    EXPECT_THROW(load_kb(text), ValidationError);
    EXPECT_THROW(load_kb("[bands Nope]\n"), kv::ParseError);
}

// Random interval tables on the 0.1 grid, half of them perturbed, judged by
// brute force over every representable fixed-point value.
ProposedBandTable random_table(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> grid(-600, 3000);
    std::set<int> cuts;
    const int n = 1 + static_cast<int>(rng() % 5);
    while (static_cast<int>(cuts.size()) < n) cuts.insert(grid(rng));
    std::vector<double> bp;
    for (int c : cuts) bp.push_back(from_x10(c));

    ProposedBandTable t;
    t.kind = VitalKind::HeartRate;
    for (std::size_t i = 0; i <= bp.size(); ++i) {
        t.intervals.push_back({i == 0 ? -kInf : bp[i - 1], i == bp.size() ? kInf : bp[i],
                               static_cast<Band>(rng() % 3)});
    }
    if (rng() % 2 == 0) return t;

    auto& iv = t.intervals[rng() % t.intervals.size()];
    switch (rng() % 5) {
        case 0: iv.lo += from_x10(static_cast<int>(rng() % 7) - 3); break;
        case 1: iv.hi += from_x10(static_cast<int>(rng() % 7) - 3); break;
        case 2: std::swap(iv.lo, iv.hi); break;
        case 3: t.intervals.erase(t.intervals.begin() + static_cast<long>(rng() % t.intervals.size())); break;
        default: t.intervals.push_back(t.intervals[rng() % t.intervals.size()]); break;
    }
    return t;
}

TEST(Oracle, ValidationAndClassifyMatchBruteForce) {
    std::mt19937_64 rng(8675309);
    int valid = 0, invalid = 0;
    for (int round = 0; round < 1000; ++round) {
        const auto t = random_table(rng);

        bool ok = !t.intervals.empty();
        for (const auto& iv : t.intervals) ok = ok && iv.lo < iv.hi;
        std::vector<int> hits(kMaxValueX10 - kMinValueX10 + 1, 0);
        std::vector<Band> band(hits.size(), Band::Normal);
        for (const auto& iv : t.intervals) {
            for (std::int32_t v = kMinValueX10; v <= kMaxValueX10; ++v) {
                const double x = from_x10(v);
                if (iv.lo <= x && x < iv.hi) {
                    ++hits[v - kMinValueX10];
                    band[v - kMinValueX10] = iv.band;
                }
            }
        }
        ok = ok && std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });

        const auto errs = validate_band_table(t);
        ASSERT_EQ(errs.empty(), ok) << "round " << round << (errs.empty() ? "" : ": " + errs[0]);
        if (!ok) {
            ++invalid;
            continue;
        }
        ++valid;
        const auto table = normalize(t);
        for (std::int32_t v = kMinValueX10; v <= kMaxValueX10; ++v) {
            ASSERT_EQ(table.classify(from_x10(v)), band[v - kMinValueX10]) << "round " << round << " v " << v;
        }
    }
    EXPECT_GT(valid, 300);
    EXPECT_GT(invalid, 300);
}

}  // namespace
