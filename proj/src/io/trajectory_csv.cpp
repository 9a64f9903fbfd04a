#include <algorithm>
#include <cstdlib>
#include <cstdio>
#include <string>
#include <vector>

#include "propsim/error.hpp"
#include "propsim/scenario_io.hpp"

namespace propsim {

namespace {

constexpr std::size_t kColumns = 12;
constexpr std::string_view kScenarioTag = "# scenario: ";
constexpr std::string_view kTerminationTag = "# termination: ";
constexpr std::string_view kNegativeTag = "# first_negative_implied: ";

void append_number(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.12g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + what,
                "line " + std::to_string(line));
}

std::vector<std::string_view> split_fields(std::string_view row) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = row.find(',', start);
        fields.push_back(row.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line) {
    // strtod accepts inf/nan spellings that from_chars handles differently
    // across library versions.
    std::string tmp(field);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
        line_error(line, "malformed number '" + tmp + "'");
    }
    return v;
}

}  // namespace

std::string serialize_trajectory_csv(const Trajectory& traj) {
    std::string out;
    out += "# propsim trajectory\n";
    out += kScenarioTag;
    out += scenario_to_json(traj.scenario).dump();
    out += '\n';
    out += kTerminationTag;
    out += to_string(traj.termination);
    out += '\n';
    if (traj.first_negative_implied) {
        out += kNegativeTag;
        out += std::to_string(*traj.first_negative_implied);
        out += '\n';
    }
    out += kTrajectoryCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        out += std::to_string(i);
        for (double v : {s.t, s.capital, s.avg_maturity, s.implied, s.vega}) {
            out += ',';
            append_number(out, v);
        }
        if (i < traj.breakdowns.size()) {
            const auto& b = traj.breakdowns[i];
            for (double v : {b.aged_vega, b.trade, b.realized_pnl, b.implied_pnl, b.total_pnl,
                             b.denom_margin}) {
                out += ',';
                append_number(out, v);
            }
        } else {
            out += ",,,,,,";
        }
        out += '\n';
    }
    return out;
}

Trajectory parse_trajectory_csv(std::string_view text) {
    Trajectory traj;
    bool have_scenario = false;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    std::vector<bool> row_has_breakdown;
    std::size_t line_no = 0;

    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (line.front() == '#') {
            if (line.starts_with(kScenarioTag)) {
                try {
                    traj.scenario = parse_scenario(line.substr(kScenarioTag.size()));
                } catch (const Error& e) {
                    line_error(line_no, std::string("bad scenario: ") + e.what());
                }
                have_scenario = true;
            } else if (line.starts_with(kTerminationTag)) {
                const auto t = termination_from_string(line.substr(kTerminationTag.size()));
                if (!t) line_error(line_no, "unknown termination reason");
                traj.termination = *t;
            } else if (line.starts_with(kNegativeTag)) {
                traj.first_negative_implied = static_cast<std::size_t>(
                    parse_number(line.substr(kNegativeTag.size()), line_no));
            }
            continue;
        }
        if (!have_header) {
            if (line != kTrajectoryCsvHeader) line_error(line_no, "unexpected header");
            have_header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != kColumns) {
            line_error(line_no, "expected " + std::to_string(kColumns) + " fields, found " +
                                    std::to_string(fields.size()));
        }
        const double step = parse_number(fields[0], line_no);
        if (step != static_cast<double>(rows.size())) line_error(line_no, "step out of sequence");
        bool any_empty = false;
        bool all_empty = true;
        for (std::size_t k = 6; k < kColumns; ++k) {
            any_empty |= fields[k].empty();
            all_empty &= fields[k].empty();
        }
        if (any_empty && !all_empty) line_error(line_no, "partial breakdown columns");
        std::vector<double> values;
        for (std::size_t k = 1; k < kColumns; ++k) {
            values.push_back(k >= 6 && all_empty ? 0.0 : parse_number(fields[k], line_no));
        }
        if (!row_has_breakdown.empty() && !row_has_breakdown.back()) {
            line_error(line_no, "row follows a final (breakdown-free) row");
        }
        rows.push_back(std::move(values));
        row_has_breakdown.push_back(!all_empty);
    }

    if (!have_header) line_error(line_no, "missing header");
    if (rows.empty()) {
        if (!have_scenario) line_error(line_no, "header-only file without scenario metadata");
        traj.states.push_back(traj.scenario.initial_state());
        return traj;
    }
    if (row_has_breakdown.back()) {
        line_error(line_no, "final row carries breakdown columns (file truncated?)");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        traj.states.push_back(FundState{r[0], r[1], r[2], r[3], r[4]});
        if (row_has_breakdown[i]) {
            StepBreakdown b;
            b.aged_vega = r[5];
            b.trade = r[6];
            b.realized_pnl = r[7];
            b.implied_pnl = r[8];
            b.total_pnl = r[9];
            b.denom_margin = r[10];
            b.new_vega = rows[i + 1][4];
            traj.breakdowns.push_back(b);
        }
    }
    if (!have_scenario) {
        traj.scenario.c0 = traj.states.front().capital;
        traj.scenario.sigma0 = traj.states.front().implied;
        traj.scenario.m0 = traj.states.front().avg_maturity;
        traj.scenario.horizon = std::max<std::size_t>(1, traj.breakdowns.size());
    }
    return traj;
}

}  // namespace propsim
