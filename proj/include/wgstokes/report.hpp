#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "krylov.hpp"
#include "verification.hpp"

namespace wgstokes {

/// Rows of preformatted cells, rendered as CSV or as an aligned markdown table.
struct TextTable {
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;
};

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string to_csv(const TextTable& t) {
    std::ostringstream os;
    auto line = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
        os << '\n';
    };
    line(t.headers);
    for (const auto& r : t.rows) line(r);
    return os.str();
}

/// Number of code points, which is the display width for the symbols used here.
inline std::size_t display_width(const std::string& s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

inline std::string to_markdown(const TextTable& t) {
    std::vector<std::size_t> w(t.headers.size(), 3);
    auto widen = [&w](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size() && i < w.size(); ++i) w[i] = std::max(w[i], display_width(cells[i]));
    };
    widen(t.headers);
    for (const auto& r : t.rows) widen(r);
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        os << '|';
        for (std::size_t i = 0; i < w.size(); ++i) {
            const std::string c = i < cells.size() ? cells[i] : "";
            os << ' ' << c << std::string(w[i] - display_width(c), ' ') << " |";
        }
        os << '\n';
    };
    line(t.headers);
    os << '|';
    for (std::size_t x : w) os << std::string(x + 2, '-') << '|';
    os << '\n';
    for (const auto& r : t.rows) line(r);
    return os.str();
}

inline std::string format_rate(double r) {
    if (std::isnan(r)) return "--";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r);
    return buf;
}

/// %.6e, or an empty cell for undefined values.
inline std::string format_cell(double v) { return std::isnan(v) ? std::string() : format_sci(v); }

inline std::string format_mu(double mu) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", mu);
    return buf;
}

/// Long-format CSV of one or more convergence tables (one per mu).
inline TextTable convergence_csv_table(const std::vector<ConvergenceTable>& tables) {
    TextTable t;
    t.headers = {"mu", "N", "h", "l2_velocity", "rate_l2", "superconv", "rate_superconv", "grad_error",
                 "rate_grad", "pressure_error", "rate_pressure", "alpha_h", "iterations", "converged"};
    for (const auto& tab : tables)
        for (const auto& r : tab.rows) {
            const ErrorReport& e = r.errors;
            t.rows.push_back({format_sci(tab.mu), std::to_string(e.num_elements), format_sci(e.h),
                              format_sci(e.l2_velocity), format_cell(r.rate_l2), format_sci(e.superconv),
                              format_cell(r.rate_superconv), format_sci(e.grad_error), format_cell(r.rate_grad),
                              format_sci(e.pressure_error), format_cell(r.rate_pressure), format_sci(e.alpha_h),
                              std::to_string(r.iterations), r.converged ? "true" : "false"});
        }
    return t;
}

/// Velocity error table with one (error, rate) column pair per mu. The first
/// row names the column groups; rows missing a converged solve carry a `*`.
inline TextTable convergence_markdown_table(const std::vector<ConvergenceTable>& tables) {
    TextTable t;
    t.headers = {""};
    std::vector<std::string> sub = {"N"};
    for (const auto& tab : tables) {
        t.headers.push_back("μ = " + format_mu(tab.mu));
        t.headers.push_back("");
        sub.push_back("‖u − u_h‖");
        sub.push_back("conv. rate");
    }
    t.rows.push_back(sub);
    const std::size_t nrows = tables.empty() ? 0 : tables.front().rows.size();
    for (std::size_t i = 0; i < nrows; ++i) {
        std::vector<std::string> row = {std::to_string(tables.front().rows[i].errors.num_elements)};
        for (const auto& tab : tables) {
            const auto& r = tab.rows[i];
            row.push_back(format_sci(r.errors.l2_velocity) + (r.converged ? "" : "*"));
            row.push_back(format_rate(r.rate_l2));
        }
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace wgstokes
