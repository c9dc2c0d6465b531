#include "ehc/knowledge_base.hpp"

#include "ehc/kvtext.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <limits>

namespace ehc::kb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// First fixed-point value x (in [kMinValueX10, kMaxValueX10 + 1]) whose
// physical value x / 10.0 is >= bound. Uses the same comparison as
// classification so domain coverage matches what classify() will see.
std::int32_t first_at_or_above(double bound) {
    constexpr std::int32_t kEnd = kMaxValueX10 + 1;
    if (bound <= from_x10(kMinValueX10)) return kMinValueX10;
    if (bound > from_x10(kMaxValueX10)) return kEnd;
    auto x = static_cast<std::int32_t>(std::ceil(bound * 10.0));
    x = std::clamp(x, kMinValueX10, kEnd);
    while (x > kMinValueX10 && from_x10(x - 1) >= bound) --x;
    while (x < kEnd && from_x10(x) < bound) ++x;
    return x;
}

struct Span {
    std::int32_t begin;
    std::int32_t end;
    Band band;
};

std::string fmt(double v) { return kv::format_number(v); }

std::string range_text(std::int32_t begin, std::int32_t end) {
    return "[" + fmt(from_x10(begin)) + ", " + (end > kMaxValueX10 ? "inf" : fmt(from_x10(end))) + ")";
}

std::vector<Span> domain_spans(const ProposedBandTable& table) {
    std::vector<Span> spans;
    for (const auto& iv : table.intervals) {
        if (!(iv.lo < iv.hi)) continue;
        const auto b = first_at_or_above(iv.lo);
        const auto e = first_at_or_above(iv.hi);
        if (b < e) spans.push_back({b, e, iv.band});
    }
    std::stable_sort(spans.begin(), spans.end(),
                     [](const Span& a, const Span& b) { return a.begin < b.begin; });
    return spans;
}

}  // namespace

Band BandTable::classify(double value) const noexcept {
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), value);
    return bands[static_cast<std::size_t>(it - breakpoints.begin())];
}

std::vector<BandInterval> BandTable::intervals() const {
    std::vector<BandInterval> out;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        out.push_back({i == 0 ? -kInf : breakpoints[i - 1],
                       i == breakpoints.size() ? kInf : breakpoints[i], bands[i]});
    }
    return out;
}

ProposedBandTable ProposedBandTable::from_breakpoints(VitalKind kind,
                                                      const std::vector<double>& breakpoints,
                                                      const std::vector<Band>& bands) {
    ProposedBandTable t;
    t.kind = kind;
    if (bands.size() != breakpoints.size() + 1) {
        t.shape_error = std::string(to_string(kind)) + ": band count " + std::to_string(bands.size()) +
                        " must equal breakpoint count + 1 (" + std::to_string(breakpoints.size() + 1) + ")";
        return t;
    }
    for (std::size_t i = 0; i < bands.size(); ++i) {
        t.intervals.push_back({i == 0 ? -kInf : breakpoints[i - 1],
                               i == breakpoints.size() ? kInf : breakpoints[i], bands[i]});
    }
    return t;
}

const BandTable* KnowledgeBase::table(VitalKind k) const noexcept {
    const auto& t = tables[index_of(k)];
    return t ? &*t : nullptr;
}

const TrendRule* KnowledgeBase::trend(VitalKind k) const noexcept {
    const auto& t = trends[index_of(k)];
    return t ? &*t : nullptr;
}

double KnowledgeBase::max_trend_window_s() const noexcept {
    double w = 0.0;
    for (const auto& t : trends) {
        if (t) w = std::max(w, t->window_s);
    }
    return w;
}

std::vector<std::string> validate_band_table(const ProposedBandTable& table) {
    const std::string name(to_string(table.kind));
    std::vector<std::string> errs;
    if (table.shape_error) errs.push_back(*table.shape_error);
    if (table.intervals.empty()) {
        if (!table.shape_error) errs.push_back(name + ": table has no intervals");
        return errs;
    }

    for (std::size_t i = 0; i < table.intervals.size(); ++i) {
        const auto& iv = table.intervals[i];
        if (!(iv.lo < iv.hi)) {
            errs.push_back(name + ": non-ascending breakpoints " + fmt(iv.lo) + " >= " + fmt(iv.hi) +
                           " (interval " + std::to_string(i + 1) + ", " +
                           std::string(to_string(iv.band)) + ")");
        }
    }

    // Sweep the fixed-point domain once; spans are sorted by start.
    const auto spans = domain_spans(table);
    std::int32_t cursor = kMinValueX10;
    std::optional<Band> prev_band;
    for (const auto& s : spans) {
        if (s.begin > cursor) {
            std::string between = prev_band ? " between " + std::string(to_string(*prev_band)) + " and " +
                                                  std::string(to_string(s.band))
                                            : " below " + std::string(to_string(s.band));
            errs.push_back(name + ": gap" + between + " over " + range_text(cursor, s.begin));
        } else if (s.begin < cursor) {
            errs.push_back(name + ": overlap of " + std::string(to_string(s.band)) + " with " +
                           std::string(to_string(*prev_band)) + " over " +
                           range_text(s.begin, std::min(cursor, s.end)));
        }
        if (s.end > cursor) {
            cursor = s.end;
            prev_band = s.band;
        }
    }
    if (cursor <= kMaxValueX10) {
        errs.push_back(name + ": gap" +
                       (prev_band ? " above " + std::string(to_string(*prev_band)) : std::string{}) +
                       " over " + range_text(cursor, kMaxValueX10 + 1));
    }
    return errs;
}

BandTable normalize(const ProposedBandTable& table) {
    BandTable out;
    out.kind = table.kind;
    const auto spans = domain_spans(table);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i > 0) out.breakpoints.push_back(from_x10(spans[i].begin));
        out.bands.push_back(spans[i].band);
    }
    return out;
}

std::vector<std::string> validate_proposal(const KbProposal& p) {
    std::vector<std::string> errs;
    std::bitset<kVitalKindCount> have;
    for (const auto& t : p.bands) {
        if (have.test(index_of(t.kind))) {
            errs.push_back(std::string(to_string(t.kind)) + ": more than one band table");
        }
        have.set(index_of(t.kind));
        auto table_errs = validate_band_table(t);
        errs.insert(errs.end(), table_errs.begin(), table_errs.end());
    }
    for (auto k : kAllVitalKinds) {
        if (!have.test(index_of(k))) errs.push_back(std::string(to_string(k)) + ": missing band table");
    }

    std::bitset<kVitalKindCount> have_trend;
    for (const auto& r : p.trends) {
        const std::string name(to_string(r.kind));
        if (have_trend.test(index_of(r.kind))) errs.push_back(name + ": more than one trend rule");
        have_trend.set(index_of(r.kind));
        if (!(r.window_s > 0)) errs.push_back(name + ": trend window_s must be > 0");
        if (!(r.max_abs_delta > 0)) errs.push_back(name + ": trend max_abs_delta must be > 0");
    }

    const auto& d = p.debounce;
    if (d.n_warning_raise < 1) errs.push_back("debounce: n_warning_raise must be >= 1");
    if (d.n_critical_raise < 1) errs.push_back("debounce: n_critical_raise must be >= 1");
    if (d.m_clear < 1) errs.push_back("debounce: m_clear must be >= 1");
    return errs;
}

KnowledgeBase apply_kb_update(const KnowledgeBase& kb, const KbProposal& proposal,
                              std::string author, TimestampMs now) {
    auto errs = validate_proposal(proposal);
    if (!errs.empty()) throw ValidationError(std::move(errs));

    KnowledgeBase next;
    for (const auto& t : proposal.bands) next.tables[index_of(t.kind)] = normalize(t);
    for (const auto& r : proposal.trends) next.trends[index_of(r.kind)] = r;
    next.debounce = proposal.debounce;
    next.revision = kb.revision + 1;
    next.author = std::move(author);
    next.updated_at = now;
    return next;
}

KnowledgeBase default_knowledge_base() {
    using enum Band;
    KnowledgeBase kb;
    auto set = [&](VitalKind k, std::vector<double> bp, double window_s, double delta) {
        kb.tables[index_of(k)] = BandTable{k, std::move(bp), {Critical, Warning, Normal, Warning, Critical}};
        kb.trends[index_of(k)] = TrendRule{k, window_s, delta};
    };
    set(VitalKind::BodyTemperature, {35.0, 36.0, 37.5, 38.5}, 60.0, 1.0);
    set(VitalKind::HeartRate, {50, 60, 100, 120}, 60.0, 25.0);
    set(VitalKind::SystolicBP, {80, 90, 140, 180}, 60.0, 30.0);
    set(VitalKind::DiastolicBP, {50, 60, 90, 120}, 60.0, 20.0);
    set(VitalKind::BloodGlucose, {54, 70, 140, 200}, 60.0, 40.0);
    kb.revision = 1;
    kb.author = "default";
    kb.updated_at = 0;
    return kb;
}

KbProposal to_proposal(const KnowledgeBase& kb) {
    KbProposal p;
    for (const auto& t : kb.tables) {
        if (t) p.bands.push_back({t->kind, t->intervals(), std::nullopt});
    }
    for (const auto& r : kb.trends) {
        if (r) p.trends.push_back(*r);
    }
    p.debounce = kb.debounce;
    return p;
}

std::string save_kb(const KnowledgeBase& kb) {
    kv::Writer w;
    w.comment("Expert-system knowledge base. Intervals are lower-inclusive, upper-exclusive.");
    w.section("meta")
        .entry("revision", kb.revision)
        .entry("author", std::string_view(kb.author))
        .entry("updated_at", std::uint64_t{kb.updated_at});
    for (const auto& t : kb.tables) {
        if (!t) continue;
        std::string bps, bands;
        for (double b : t->breakpoints) bps += (bps.empty() ? "" : ", ") + fmt(b);
        for (Band b : t->bands) bands += (bands.empty() ? "" : ", ") + std::string(to_string(b));
        w.section("bands", to_string(t->kind))
            .entry("breakpoints", std::string_view(bps))
            .entry("bands", std::string_view(bands));
    }
    for (const auto& r : kb.trends) {
        if (!r) continue;
        w.section("trend", to_string(r->kind))
            .entry("window_s", r->window_s)
            .entry("max_abs_delta", r->max_abs_delta);
    }
    w.section("debounce")
        .entry("n_warning_raise", kb.debounce.n_warning_raise)
        .entry("n_critical_raise", kb.debounce.n_critical_raise)
        .entry("m_clear", kb.debounce.m_clear);
    return w.str();
}

namespace {

struct ParsedKb {
    KbProposal proposal;
    std::uint64_t revision{1};
    std::string author;
    TimestampMs updated_at{0};
};

VitalKind section_kind(const kv::Section& s) {
    auto k = parse_vital_kind(s.arg);
    if (!k) throw kv::ParseError(s.line, s.name, "unknown vital kind '" + s.arg + "'");
    return *k;
}

Band parse_band_entry(const kv::Entry& e, const std::string& text) {
    auto b = parse_band(text);
    if (!b) throw kv::ParseError(e.line, e.key, "unknown band '" + text + "'");
    return *b;
}

int parse_count(const kv::Entry& e) {
    const auto v = e.as_int();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw kv::ParseError(e.line, e.key, "value out of range");
    }
    return static_cast<int>(v);
}

ParsedKb parse_kb_text(std::string_view text) {
    const auto doc = kv::parse(text);
    ParsedKb out;
    for (const auto& s : doc.sections) {
        if (s.name == "meta") {
            for (const auto& e : s.entries) {
                if (e.key == "revision") out.revision = e.as_uint();
                else if (e.key == "author") out.author = e.value;
                else if (e.key == "updated_at") out.updated_at = e.as_uint();
                else throw kv::ParseError(e.line, e.key, "unknown meta key");
            }
        } else if (s.name == "bands") {
            const auto kind = section_kind(s);
            const kv::Entry* bp = nullptr;
            const kv::Entry* bands = nullptr;
            std::vector<BandInterval> intervals;
            for (const auto& e : s.entries) {
                if (e.key == "breakpoints") {
                    bp = &e;
                } else if (e.key == "bands") {
                    bands = &e;
                } else if (e.key == "interval") {
                    // interval = lo, hi, Band
                    auto parts = e.as_list();
                    if (parts.size() != 3) throw kv::ParseError(e.line, e.key, "expected 'lo, hi, Band'");
                    intervals.push_back({kv::Entry{e.key, parts[0], e.line}.as_double(),
                                         kv::Entry{e.key, parts[1], e.line}.as_double(),
                                         parse_band_entry(e, parts[2])});
                } else {
                    throw kv::ParseError(e.line, e.key, "unknown bands key");
                }
            }
            if ((bp || bands) && !intervals.empty()) {
                throw kv::ParseError(s.line, s.name, "use either breakpoints/bands or interval lines, not both");
            }
            if (!intervals.empty()) {
                out.proposal.bands.push_back({kind, std::move(intervals), std::nullopt});
            } else {
                if (!bands) throw kv::ParseError(s.line, "bands", "missing 'bands' entry");
                std::vector<double> points;
                if (bp) {
                    for (const auto& item : bp->as_list()) points.push_back(kv::Entry{bp->key, item, bp->line}.as_double());
                }
                std::vector<Band> band_list;
                for (const auto& item : bands->as_list()) band_list.push_back(parse_band_entry(*bands, item));
                out.proposal.bands.push_back(ProposedBandTable::from_breakpoints(kind, points, band_list));
            }
        } else if (s.name == "trend") {
            TrendRule r;
            r.kind = section_kind(s);
            bool have_window = false, have_delta = false;
            for (const auto& e : s.entries) {
                if (e.key == "window_s") { r.window_s = e.as_double(); have_window = true; }
                else if (e.key == "max_abs_delta") { r.max_abs_delta = e.as_double(); have_delta = true; }
                else throw kv::ParseError(e.line, e.key, "unknown trend key");
            }
            if (!have_window) throw kv::ParseError(s.line, "window_s", "missing trend window_s");
            if (!have_delta) throw kv::ParseError(s.line, "max_abs_delta", "missing trend max_abs_delta");
            out.proposal.trends.push_back(r);
        } else if (s.name == "debounce") {
            for (const auto& e : s.entries) {
                if (e.key == "n_warning_raise") out.proposal.debounce.n_warning_raise = parse_count(e);
                else if (e.key == "n_critical_raise") out.proposal.debounce.n_critical_raise = parse_count(e);
                else if (e.key == "m_clear") out.proposal.debounce.m_clear = parse_count(e);
                else throw kv::ParseError(e.line, e.key, "unknown debounce key");
            }
        } else {
            throw kv::ParseError(s.line, s.name, "unknown section");
        }
    }
    return out;
}

}  // namespace

KbProposal parse_kb_proposal(std::string_view text) { return parse_kb_text(text).proposal; }

KnowledgeBase load_kb(std::string_view text) {
    auto parsed = parse_kb_text(text);
    auto errs = validate_proposal(parsed.proposal);
    if (!errs.empty()) throw ValidationError(std::move(errs));
    KnowledgeBase kb;
    for (const auto& t : parsed.proposal.bands) kb.tables[index_of(t.kind)] = normalize(t);
    for (const auto& r : parsed.proposal.trends) kb.trends[index_of(r.kind)] = r;
    kb.debounce = parsed.proposal.debounce;
    kb.revision = parsed.revision;
    kb.author = parsed.author;
    kb.updated_at = parsed.updated_at;
    return kb;
}

}  // namespace ehc::kb
