#include "ehc/kvtext.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace ehc::kv {

ParseError::ParseError(int line, std::string field, const std::string& message)
    : Error("line " + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") + ": " +
            message),
      line_(line),
      field_(std::move(field)) {}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

double Entry::as_double() const {
    const std::string v = trim(value);
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ParseError(line, key, "expected a number, got '" + value + "'");
    }
    return out;
}

std::int64_t Entry::as_int() const {
    const std::string v = trim(value);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ParseError(line, key, "expected an integer, got '" + value + "'");
    }
    return out;
}

std::uint64_t Entry::as_uint() const {
    const std::string v = trim(value);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ParseError(line, key, "expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

bool Entry::as_bool() const {
    std::string v = trim(value);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ParseError(line, key, "expected a boolean, got '" + value + "'");
}

std::vector<std::string> Entry::as_list() const {
    std::vector<std::string> out;
    std::string_view rest = value;
    while (true) {
        auto comma = rest.find(',');
        auto item = trim(rest.substr(0, comma));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

const Entry* Section::find(std::string_view key) const {
    const Entry* found = nullptr;
    for (const auto& e : entries) {
        if (e.key == key) found = &e;  // last one wins
    }
    return found;
}

std::vector<const Entry*> Section::find_all(std::string_view key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries) {
        if (e.key == key) out.push_back(&e);
    }
    return out;
}

std::vector<const Section*> Document::find_all(std::string_view name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections) {
        if (s.name == name) out.push_back(&s);
    }
    return out;
}

const Section* Document::find(std::string_view name) const {
    for (const auto& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

Document parse(std::string_view text) {
    Document doc;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "", "unterminated section header");
            const std::string inner = trim(std::string_view(line).substr(1, line.size() - 2));
            if (inner.empty()) throw ParseError(line_no, "", "empty section name");
            Section s;
            auto sp = inner.find_first_of(" \t");
            s.name = inner.substr(0, sp);
            if (sp != std::string::npos) s.arg = trim(std::string_view(inner).substr(sp));
            s.line = line_no;
            doc.sections.push_back(std::move(s));
        } else {
            auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(line_no, "", "expected 'key = value'");
            Entry e{trim(std::string_view(line).substr(0, eq)),
                    trim(std::string_view(line).substr(eq + 1)), line_no};
            if (e.key.empty()) throw ParseError(line_no, "", "empty key");
            if (doc.sections.empty()) throw ParseError(line_no, e.key, "entry outside any section");
            doc.sections.back().entries.push_back(std::move(e));
        }
    }
    return doc;
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

Writer& Writer::comment(std::string_view text) {
    out_ += "# ";
    out_ += text;
    out_ += '\n';
    return *this;
}

Writer& Writer::section(std::string_view name, std::string_view arg) {
    if (!out_.empty()) out_ += '\n';
    out_ += '[';
    out_ += name;
    if (!arg.empty()) {
        out_ += ' ';
        out_ += arg;
    }
    out_ += "]\n";
    return *this;
}

Writer& Writer::entry(std::string_view key, std::string_view value) {
    out_ += key;
    out_ += " = ";
    out_ += value;
    out_ += '\n';
    return *this;
}

Writer& Writer::entry(std::string_view key, double value) {
    return entry(key, std::string_view(format_number(value)));
}

Writer& Writer::entry(std::string_view key, std::int64_t value) {
    return entry(key, std::string_view(std::to_string(value)));
}

Writer& Writer::entry(std::string_view key, std::uint64_t value) {
    return entry(key, std::string_view(std::to_string(value)));
}

}  // namespace ehc::kv
