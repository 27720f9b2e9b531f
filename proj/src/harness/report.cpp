#include <cstdio>
#include <ostream>

#include "sae/harness.hpp"
#include "sae/io.hpp"

namespace sae {

namespace {

std::string opt(const std::optional<double>& v)
{
    return v ? format_double(*v) : "NA";
}

std::string opt(const std::optional<Index>& v)
{
    return v ? std::to_string(*v) : "NA";
}

std::string fixed(const std::optional<double>& v, int digits)
{
    if (!v) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
    return buf;
}

} // namespace

void write_report_csv(const StudyReport& report, std::ostream& out)
{
    out << "scenario,k,snr,total,method,mse_mean,rv_row_mean,rv_col_mean,rank_mean,replications,rv_runs,failures,seed\n";
    for (const auto& r : report.rows) {
        out << r.scenario << ',' << opt(r.k) << ',' << opt(r.snr) << ',' << opt(r.total) << ',' << r.method << ','
            << format_double(r.mse_mean) << ',' << opt(r.rv_row_mean) << ',' << opt(r.rv_col_mean) << ','
            << format_double(r.rank_mean) << ',' << r.replications << ',' << r.rv_runs << ',' << r.failures << ','
            << r.seed << '\n';
    }
}

void write_report_table(const StudyReport& report, std::ostream& out)
{
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %5s %6s %7s %-9s %10s %7s %7s %7s %5s\n", "scenario", "k", "snr", "total",
                  "method", "mse", "rv_row", "rv_col", "rank", "reps");
    out << line;
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof line, "%-20s %5s %6s %7s %-9s %10.5f %7s %7s %7.2f %5d\n", r.scenario.c_str(),
                      r.k ? std::to_string(*r.k).c_str() : "-", fixed(r.snr, 2).c_str(), fixed(r.total, 0).c_str(),
                      r.method.c_str(), r.mse_mean, fixed(r.rv_row_mean, 3).c_str(), fixed(r.rv_col_mean, 3).c_str(),
                      r.rank_mean, r.replications);
        out << line;
    }
}

} // namespace sae
