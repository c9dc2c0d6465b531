#pragma once

#include "ehc/error.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::kv {

// Line-oriented key-value text shared by scenario, knowledge-base and
// gateway config files:
//
//   # comment
//   [section optional-argument]
//   key = value
//
// Sections may repeat; keys may repeat within a section and keep their order.

class ParseError : public Error {
public:
    ParseError(int line, std::string field, const std::string& message);

    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    int line_;
    std::string field_;
};

struct Entry {
    std::string key;
    std::string value;
    int line{0};

    double as_double() const;
    std::int64_t as_int() const;
    std::uint64_t as_uint() const;
    bool as_bool() const;
    /// Comma-separated items, each trimmed; empty items are dropped.
    std::vector<std::string> as_list() const;
};

struct Section {
    std::string name;
    std::string arg;
    int line{0};
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const;
    std::vector<const Entry*> find_all(std::string_view key) const;
};

struct Document {
    std::vector<Section> sections;

    std::vector<const Section*> find_all(std::string_view name) const;
    const Section* find(std::string_view name) const;
};

Document parse(std::string_view text);

std::string trim(std::string_view s);

/// Shortest decimal text that round-trips the double; "inf"/"-inf" for infinities.
std::string format_number(double v);

class Writer {
public:
    Writer& comment(std::string_view text);
    Writer& section(std::string_view name, std::string_view arg = {});
    Writer& entry(std::string_view key, std::string_view value);
    Writer& entry(std::string_view key, double value);
    Writer& entry(std::string_view key, std::int64_t value);
    Writer& entry(std::string_view key, std::uint64_t value);
    Writer& entry(std::string_view key, int value) { return entry(key, std::int64_t{value}); }
    std::string str() const { return out_; }

private:
    std::string out_;
};

}  // namespace ehc::kv
