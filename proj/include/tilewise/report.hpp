// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// CSV report rows. Numbers are written with shortest round-trip formatting so
// fixed-seed runs are byte-identical and rows parse back losslessly.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tilewise/importance.hpp"

namespace tilewise {

struct ReportRow {
    std::string model;
    std::string layer_set;
    int tile_a = 1;
    int tile_b = 1;
    double sparsity = 0.0;
    Criterion criterion = Criterion::l1;
    LossReport report;  // loss, baseline_loss, difference travel in the CSV
    bool transformed = false;
};

std::string csv_header();
std::string to_csv(const ReportRow& row);            // one line, no newline
ReportRow report_row_from_csv(std::string_view line);  // throws ParseError

std::string format_double(double v);  // shortest representation that round-trips
double parse_double(std::string_view s);

// Full file: header plus one line per row, '\n' separated.
std::string render_report(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report(std::string_view text);

}  // namespace tilewise
