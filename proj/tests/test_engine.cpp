#include "ehc/engine.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace ehc;
using namespace ehc::engine;

namespace {

kb::KnowledgeBase without_trends(kb::DebounceConfig d = {}) {
    auto kb = kb::default_knowledge_base();
    for (auto& t : kb.trends) t.reset();
    kb.debounce = d;
    return kb;
}

Band band_of(char c) {
    switch (c) {
        case 'W': return Band::Warning;
        case 'C': return Band::Critical;
        default: return Band::Normal;
    }
}

// Feeds a band trace ("NNWWW") through one channel; returns, per step, 'R'
// for a raise, 'X' for a clear and '.' otherwise.
std::string run_trace(const std::string& trace, const kb::KnowledgeBase& kb,
                      std::vector<AlertEvent>* raised = nullptr) {
    PatientVitalState st;
    std::string out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        ClassifiedSample s{VitalKind::HeartRate, 1000 * i, 700, band_of(trace[i])};
        auto ev = update_state(st, 1, s, kb);
        if (!ev) {
            out += '.';
        } else if (auto* a = std::get_if<AlertEvent>(&*ev)) {
            out += 'R';
            if (raised) raised->push_back(*a);
        } else {
            out += 'X';
        }
    }
    return out;
}

TEST(Trend, SuddenRiseIsReported) {
    auto kb = kb::default_knowledge_base();
    std::vector<TimedValue> w{{0, 700}, {30000, 1000}};
    auto v = trend_check(VitalKind::HeartRate, w, kb);
    ASSERT_TRUE(v);
    EXPECT_DOUBLE_EQ(v->observed_delta, 30.0);
    EXPECT_DOUBLE_EQ(v->window_span_s, 30.0);
}

TEST(Trend, ConstantSignalIsQuiet) {
    auto kb = kb::default_knowledge_base();
    std::vector<TimedValue> w;
    for (TimestampMs t = 0; t <= 60000; t += 1000) w.push_back({t, 720});
    EXPECT_FALSE(trend_check(VitalKind::HeartRate, w, kb));
}

TEST(Trend, DeltaEqualToLimitIsQuiet) {
    auto kb = kb::default_knowledge_base();
    std::vector<TimedValue> w{{0, 700}, {10000, 950}};
    EXPECT_FALSE(trend_check(VitalKind::HeartRate, w, kb));
    w.back().value_x10 = 951;
    EXPECT_TRUE(trend_check(VitalKind::HeartRate, w, kb));
}

TEST(Trend, OldSamplesFallOutOfWindow) {
    auto kb = kb::default_knowledge_base();
    std::vector<TimedValue> w{{0, 700}, {61000, 1000}};
    EXPECT_FALSE(trend_check(VitalKind::HeartRate, w, kb));
}

TEST(Trend, NormalSampleWithTrendRaisesWarningAlert) {
    auto kb = kb::default_knowledge_base();
    kb.debounce = {1, 1, 5};
    PatientVitalState st;
    EXPECT_FALSE(update_state(st, 4, {VitalKind::HeartRate, 0, 650, Band::Normal}, kb));
    auto ev = update_state(st, 4, {VitalKind::HeartRate, 20000, 950, Band::Normal}, kb);
    ASSERT_TRUE(ev);
    const auto& a = std::get<AlertEvent>(*ev);
    EXPECT_EQ(a.band, Band::Warning);
    EXPECT_EQ(a.cause, AlertCause::Trend);
    ASSERT_TRUE(a.trend);
    EXPECT_DOUBLE_EQ(a.trend->observed_delta, 30.0);
}

TEST(Debounce, Examples) {
    const auto kb = without_trends();
    EXPECT_EQ(run_trace("NNWWW", kb), "....R");
    EXPECT_EQ(run_trace("WWNWWW", kb), ".....R");
    EXPECT_EQ(run_trace("C", kb), "R");
    EXPECT_EQ(run_trace("CNNNNN", kb), "R....X");
    EXPECT_EQ(run_trace("CNNNNWNNNNN", kb), "R.........X");
}

TEST(Debounce, AlertCarriesTriggeringSample) {
    std::vector<AlertEvent> raised;
    run_trace("WWC", without_trends(), &raised);
    ASSERT_EQ(raised.size(), 1u);
    EXPECT_EQ(raised[0].band, Band::Critical);
    EXPECT_EQ(raised[0].reading_timestamp_ms, 2000u);
    EXPECT_EQ(raised[0].patient_id, 1);
}

TEST(Debounce, OutOfOrderSampleThrowsAndLeavesState) {
    const auto kb = without_trends();
    PatientVitalState st;
    update_state(st, 1, {VitalKind::HeartRate, 5000, 700, Band::Warning}, kb);
    const auto before = st.channel(VitalKind::HeartRate).out_of_normal_run;
    EXPECT_THROW(update_state(st, 1, {VitalKind::HeartRate, 4000, 700, Band::Warning}, kb), OutOfOrderSample);
    EXPECT_EQ(st.channel(VitalKind::HeartRate).out_of_normal_run, before);
    EXPECT_NO_THROW(update_state(st, 1, {VitalKind::HeartRate, 5000, 700, Band::Warning}, kb));
}

TEST(Debounce, ChannelsAreIndependent) {
    const auto kb = without_trends();
    PatientVitalState st;
    for (int i = 0; i < 2; ++i) {
        update_state(st, 1, {VitalKind::HeartRate, 1000u * i, 700, Band::Warning}, kb);
        update_state(st, 1, {VitalKind::SystolicBP, 1000u * i, 700, Band::Warning}, kb);
    }
    EXPECT_TRUE(update_state(st, 1, {VitalKind::HeartRate, 3000, 700, Band::Warning}, kb));
    EXPECT_FALSE(update_state(st, 1, {VitalKind::SystolicBP, 3000, 700, Band::Normal}, kb));
}

// Reference: decisions recomputed from trailing runs of the whole history.
std::string reference(const std::string& trace, const kb::DebounceConfig& d) {
    std::string out;
    bool active = false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        auto trailing = [&](auto pred) {
            int n = 0;
            for (std::size_t j = i + 1; j-- > 0 && pred(trace[j]);) ++n;
            return n;
        };
        const int abnormal = trailing([](char c) { return c != 'N'; });
        const int critical = trailing([](char c) { return c == 'C'; });
        const int normal = trailing([](char c) { return c == 'N'; });
        char step = '.';
        if (!active && (critical >= d.n_critical_raise || abnormal >= d.n_warning_raise)) {
            active = true;
            step = 'R';
        } else if (active && normal >= d.m_clear) {
            active = false;
            step = 'X';
        }
        out += step;
    }
    return out;
}

TEST(Debounce, ExhaustiveAgainstReference) {
    const std::vector<kb::DebounceConfig> configs{{3, 1, 5}, {2, 2, 1}, {1, 3, 2}, {4, 2, 3}};
    const std::string alphabet = "NWC";
    for (const auto& d : configs) {
        const auto kb = without_trends(d);
        for (int len = 1; len <= 8; ++len) {
            int total = 1;
            for (int i = 0; i < len; ++i) total *= 3;
            for (int code = 0; code < total; ++code) {
                std::string trace;
                for (int i = 0, c = code; i < len; ++i, c /= 3) trace += alphabet[c % 3];
                ASSERT_EQ(run_trace(trace, kb), reference(trace, d))
                    << trace << " with " << d.n_warning_raise << "/" << d.n_critical_raise << "/" << d.m_clear;
            }
        }
    }
}

TEST(Classify, UnknownKindWithoutTable) {
    auto kb = kb::default_knowledge_base();
    kb.tables[index_of(VitalKind::BloodGlucose)].reset();
    EXPECT_THROW(classify(VitalKind::BloodGlucose, 100, kb), UnknownKind);
    EXPECT_EQ(classify(VitalKind::HeartRate, 130, kb), Band::Critical);
}

}  // namespace
