#pragma once

// Minimal CSV reading/writing. Quoted fields follow RFC 4180; numbers are
// formatted with std::to_chars so output never depends on the C locale.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "netcontrol/error.hpp"

namespace netcontrol::csv {

struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

/// Splits one physical line into fields. Quoted fields may contain commas and
/// doubled quotes; embedded newlines are not supported.
inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no,
                                           const std::string& source) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    bool was_quoted = false;
    std::size_t quoted_end = 0;
    const auto finish = [&] {
        if (!was_quoted) return std::string(trim(current));
        // Keep the quoted text verbatim and trim only what follows it.
        return current.substr(0, quoted_end) + std::string(trim(std::string_view(current).substr(quoted_end)));
    };
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                    quoted_end = current.size();
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            // Padding before an opening quote is not part of the value.
            current = std::string(trim(current));
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(finish());
            current.clear();
            was_quoted = false;
        } else {
            current.push_back(c);
        }
    }
    if (quoted) {
        throw Error(ErrorCode::MalformedRow, "unterminated quoted field",
                    source + ":" + std::to_string(line_no));
    }
    fields.push_back(finish());
    return fields;
}

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// Reads the header and checks it against the expected column names
    /// (case-insensitive). Returns false on an empty stream.
    bool expect_header(const std::vector<std::string_view>& columns) {
        auto row = next();
        if (!row) return false;
        if (row->fields.size() != columns.size()) {
            throw Error(ErrorCode::MalformedRow,
                        "expected " + std::to_string(columns.size()) + " header columns, got " +
                            std::to_string(row->fields.size()),
                        where(row->line));
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            auto name = lower(row->fields[i]);
            if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xef\xbb\xbf") == 0) {
                name.erase(0, 3);
            }
            if (name != columns[i]) {
                throw Error(ErrorCode::MalformedRow,
                            "header column " + std::to_string(i + 1) + " should be '" +
                                std::string(columns[i]) + "', got '" + row->fields[i] + "'",
                            where(row->line));
            }
        }
        return true;
    }

    /// Next non-blank row, or nullopt at end of stream.
    std::optional<Row> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (trim(line).empty()) continue;
            return Row{line_, split_line(line, line_, source_)};
        }
        return std::nullopt;
    }

    std::string where(std::size_t line) const { return source_ + ":" + std::to_string(line); }
    const std::string& source() const noexcept { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

inline std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

/// Shortest representation that round-trips exactly.
inline std::string format_double(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos &&
        trim(field).size() == field.size()) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& field(std::string_view text) {
        sep();
        out_ << quote(text);
        return *this;
    }
    Writer& field(double value) {
        sep();
        out_ << format_double(value);
        return *this;
    }
    Writer& field(std::uint64_t value) {
        sep();
        out_ << value;
        return *this;
    }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }
    void row(std::initializer_list<std::string_view> fields) {
        for (auto f : fields) field(f);
        end_row();
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }

    std::ostream& out_;
    bool first_ = true;
};

} // namespace netcontrol::csv
