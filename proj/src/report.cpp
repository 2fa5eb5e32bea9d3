// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/report.hpp"

#include <charconv>
#include <vector>

namespace tilewise {
namespace {

constexpr const char* kHeader =
    "model,layer_set,tile_a,tile_b,sparsity,criterion,loss,baseline_loss,difference,transformed";

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

int parse_int(std::string_view s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError("bad integer field \"" + std::string(s) + "\"");
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    internal_check(ec == std::errc{}, "double formatting failed");
    return std::string(buf, p);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError("bad numeric field \"" + std::string(s) + "\"");
    return v;
}

std::string csv_header() { return kHeader; }

std::string to_csv(const ReportRow& row) {
    std::string out;
    out += row.model;
    out += ',';
    out += row.layer_set;
    out += ',';
    out += std::to_string(row.tile_a);
    out += ',';
    out += std::to_string(row.tile_b);
    out += ',';
    out += format_double(row.sparsity);
    out += ',';
    out += to_string(row.criterion);
    out += ',';
    out += format_double(row.report.loss);
    out += ',';
    out += format_double(row.report.baseline_loss);
    out += ',';
    out += format_double(row.report.difference);
    out += ',';
    out += row.transformed ? "true" : "false";
    return out;
}

ReportRow report_row_from_csv(std::string_view line) {
    const auto fields = split(line, ',');
    if (fields.size() != 10) throw ParseError("report rows need 10 fields");
    ReportRow row;
    row.model = std::string(fields[0]);
    row.layer_set = std::string(fields[1]);
    row.tile_a = parse_int(fields[2]);
    row.tile_b = parse_int(fields[3]);
    row.sparsity = parse_double(fields[4]);
    row.criterion = criterion_from_string(std::string(fields[5]));
    row.report.loss = parse_double(fields[6]);
    row.report.baseline_loss = parse_double(fields[7]);
    row.report.difference = parse_double(fields[8]);
    if (fields[9] == "true")
        row.transformed = true;
    else if (fields[9] == "false")
        row.transformed = false;
    else
        throw ParseError("bad boolean field \"" + std::string(fields[9]) + "\"");
    return row;
}

std::string render_report(const std::vector<ReportRow>& rows) {
    std::string out = csv_header();
    out += '\n';
    for (const ReportRow& row : rows) {
        out += to_csv(row);
        out += '\n';
    }
    return out;
}

std::vector<ReportRow> parse_report(std::string_view text) {
    std::vector<ReportRow> rows;
    bool first = true;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != kHeader) throw ParseError("unrecognized report header");
            first = false;
            continue;
        }
        rows.push_back(report_row_from_csv(line));
    }
    if (first) throw ParseError("report is empty");
    return rows;
}

}  // namespace tilewise
