// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/tensor.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bht::io {

/// Significant digits for forecasts and report metrics.
inline constexpr int kReportDigits = 9;

inline std::string format_number(double v, int digits = kReportDigits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Shortest text that parses back to exactly v.
inline std::string format_exact(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(std::string_view tok) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return std::nullopt;
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file and renames it into place, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ParseError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ParseError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// CSV: one series per row, one time step per column.

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

inline DenseTensor parse_csv_text(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::size_t width_line = 0;
    bool first_content = true;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        std::optional<std::size_t> bad;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_number(cells[c]);
            if (!v) {
                bad = c;
                break;
            }
            row.push_back(*v);
        }
        if (bad) {
            if (first_content) {  // header row
                first_content = false;
                continue;
            }
            throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(*bad + 1) +
                             ": non-numeric cell '" + std::string(trim(cells[*bad])) + "'");
        }
        first_content = false;
        if (rows.empty()) {
            width = row.size();
            width_line = line_no;
        } else if (row.size() != width) {
            throw ParseError("line " + std::to_string(line_no) + ": " + std::to_string(row.size()) +
                             " columns, expected " + std::to_string(width) + " (from line " +
                             std::to_string(width_line) + ")");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("CSV contains no numeric rows");
    const std::size_t n = rows.size();
    std::vector<double> data(n * width);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < width; ++t) data[i + n * t] = rows[i][t];
    return DenseTensor(Shape{n, width}, std::move(data));
}

inline DenseTensor parse_csv(const std::filesystem::path& path) { return parse_csv_text(read_file(path)); }

/// Rows are mode 0, columns the remaining modes flattened. digits = 0 writes exact values.
inline std::string csv_text(const DenseTensor& t, int digits = 0) {
    const std::size_t n = t.extent(0);
    const std::size_t cols = t.size() / n;
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            const double v = t[i + n * c];
            out += digits > 0 ? format_number(v, digits) : format_exact(v);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flat tensor text: extents on the first line, then every value in canonical
// (first index fastest) order, whitespace separated.

inline DenseTensor parse_flat_tensor_text(std::string_view text) {
    const auto nl = text.find('\n');
    const std::string_view header = trim(text.substr(0, nl));
    if (header.empty()) throw ParseError("flat tensor: missing extents line");
    Shape shape;
    {
        std::istringstream hs{std::string(header)};
        std::string tok;
        while (hs >> tok) {
            std::size_t e = 0;
            auto res = std::from_chars(tok.data(), tok.data() + tok.size(), e);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || e == 0)
                throw ParseError("flat tensor: bad extent '" + tok + "'");
            shape.push_back(e);
        }
    }
    std::vector<double> values;
    values.reserve(shape_size(shape));
    if (nl != std::string_view::npos) {
        std::istringstream vs{std::string(text.substr(nl + 1))};
        std::string tok;
        while (vs >> tok) {
            auto v = parse_number(tok);
            if (!v) throw ParseError("flat tensor: non-numeric token '" + tok + "' at value " +
                                     std::to_string(values.size() + 1));
            values.push_back(*v);
        }
    }
    if (values.size() != shape_size(shape))
        throw ParseError("flat tensor: header " + shape_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, found " + std::to_string(values.size()));
    return DenseTensor(std::move(shape), std::move(values));
}

inline DenseTensor parse_flat_tensor(const std::filesystem::path& path) {
    return parse_flat_tensor_text(read_file(path));
}

inline std::string flat_tensor_text(const DenseTensor& t, int digits = 0) {
    std::string out;
    for (std::size_t k = 0; k < t.order(); ++k) {
        if (k) out += ' ';
        out += std::to_string(t.extent(k));
    }
    out += '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        out += digits > 0 ? format_number(t[i], digits) : format_exact(t[i]);
        out += '\n';
    }
    return out;
}

enum class DataFormat { automatic, csv, flat };

inline DataFormat parse_data_format(const std::string& s) {
    if (s == "auto") return DataFormat::automatic;
    if (s == "csv") return DataFormat::csv;
    if (s == "flat") return DataFormat::flat;
    throw ConfigError("format must be auto, csv or flat, got '" + s + "'");
}

inline DenseTensor read_dataset(const std::filesystem::path& path, DataFormat format = DataFormat::automatic) {
    if (format == DataFormat::automatic)
        format = path.extension() == ".csv" ? DataFormat::csv : DataFormat::flat;
    return format == DataFormat::csv ? parse_csv(path) : parse_flat_tensor(path);
}

}  // namespace bht::io
