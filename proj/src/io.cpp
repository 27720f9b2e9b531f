#include "sae/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sae {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s)
{
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            field += ch;
        } else if (ch == ',' && !quoted) {
            fields.push_back(unquote(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    fields.push_back(unquote(field));
    return fields;
}

std::optional<double> parse_number(const std::string& s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    const std::string lower = [&] {
        std::string t = s;
        std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
        return t;
    }();
    if (lower == "nan" || lower == "inf" || lower == "-inf" || lower == "+inf") {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

bool all_numeric(const std::vector<std::string>& fields, std::size_t from)
{
    for (std::size_t i = from; i < fields.size(); ++i) {
        if (!parse_number(fields[i])) {
            return false;
        }
    }
    return true;
}

} // namespace

MatrixFormat parse_matrix_format(const std::string& s)
{
    if (s == "auto") {
        return MatrixFormat::automatic;
    }
    if (s == "csv") {
        return MatrixFormat::csv;
    }
    if (s == "mm" || s == "mtx") {
        return MatrixFormat::matrix_market;
    }
    throw invalid_input("unknown matrix format '" + s + "' (expected csv or mm)");
}

LabeledMatrix parse_csv(std::istream& in, std::optional<bool> header, std::optional<bool> labels)
{
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        rows.push_back(split_csv_line(line));
    }
    detail::require(!rows.empty(), "CSV input is empty");

    if (!labels) {
        // A label column shows up as non-numeric first fields below the header.
        const std::size_t probe = rows.size() > 1 ? 1 : 0;
        labels = !parse_number(rows[probe].front()).has_value();
    }
    const std::size_t first_col = *labels ? 1 : 0;
    if (!header) {
        header = !all_numeric(rows.front(), first_col);
    }

    LabeledMatrix out;
    std::size_t start = 0;
    if (*header) {
        for (std::size_t j = first_col; j < rows.front().size(); ++j) {
            out.col_labels.push_back(rows.front()[j]);
        }
        start = 1;
    }
    detail::require(rows.size() > start, "CSV input has no data rows");
    const std::size_t width = rows[start].size();
    detail::require(width > first_col, "CSV input has no data columns");

    const Index n = static_cast<Index>(rows.size() - start);
    const Index p = static_cast<Index>(width - first_col);
    out.values.resize(n, p);
    for (std::size_t i = start; i < rows.size(); ++i) {
        const auto& r = rows[i];
        detail::require(r.size() == width, "CSV row " + std::to_string(i + 1) + " has " + std::to_string(r.size()) +
                                               " fields, expected " + std::to_string(width));
        if (*labels) {
            out.row_labels.push_back(r.front());
        }
        for (std::size_t j = first_col; j < width; ++j) {
            const auto v = parse_number(r[j]);
            detail::require(v.has_value(), "CSV row " + std::to_string(i + 1) + ": '" + r[j] + "' is not a finite number");
            out.values(static_cast<Index>(i - start), static_cast<Index>(j - first_col)) = *v;
        }
    }
    if (*header && out.col_labels.size() != static_cast<std::size_t>(p)) {
        out.col_labels.clear();
    }
    return out;
}

Matrix parse_matrix_market(std::istream& in)
{
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), "MatrixMarket input is empty");
    std::istringstream banner(line);
    std::string tag, object, layout, field, symmetry;
    banner >> tag >> object >> layout >> field >> symmetry;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    layout = lower(layout);
    field = lower(field);
    symmetry = lower(symmetry);
    detail::require(tag == "%%MatrixMarket" && lower(object) == "matrix", "missing %%MatrixMarket matrix banner");
    detail::require(layout == "coordinate" || layout == "array", "unsupported MatrixMarket layout '" + layout + "'");
    detail::require(field == "real" || field == "integer" || field == "double",
                    "unsupported MatrixMarket field '" + field + "'");
    detail::require(symmetry == "general" || symmetry == "symmetric",
                    "unsupported MatrixMarket symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    while (std::getline(in, line) && (trim(line).empty() || trim(line).front() == '%')) {
    }
    std::istringstream size_line(line);
    long long rows = 0, cols = 0, entries = 0;
    size_line >> rows >> cols;
    detail::require(rows > 0 && cols > 0, "bad MatrixMarket size line");
    Matrix M = Matrix::Zero(rows, cols);

    if (layout == "coordinate") {
        size_line >> entries;
        for (long long e = 0; e < entries; ++e) {
            long long i = 0, j = 0;
            double v = 0.0;
            detail::require(static_cast<bool>(in >> i >> j >> v), "truncated MatrixMarket entry list");
            detail::require(i >= 1 && i <= rows && j >= 1 && j <= cols, "MatrixMarket index out of range");
            detail::require(std::isfinite(v), "MatrixMarket entry is not finite");
            M(i - 1, j - 1) += v;
            if (symmetric && i != j) {
                M(j - 1, i - 1) += v;
            }
        }
    } else {
        for (long long j = 0; j < cols; ++j) {
            for (long long i = symmetric ? j : 0; i < rows; ++i) {
                double v = 0.0;
                detail::require(static_cast<bool>(in >> v), "truncated MatrixMarket array");
                M(i, j) = v;
                if (symmetric) {
                    M(j, i) = v;
                }
            }
        }
    }
    return M;
}

LabeledMatrix read_matrix(const std::string& path, const ReadOptions& options)
{
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open input file " + path);
    }
    MatrixFormat format = options.format;
    if (format == MatrixFormat::automatic) {
        const std::string ext = std::filesystem::path(path).extension().string();
        std::string first;
        std::getline(in, first);
        in.clear();
        in.seekg(0);
        format = (ext == ".mtx" || ext == ".mm" || first.rfind("%%MatrixMarket", 0) == 0) ? MatrixFormat::matrix_market
                                                                                          : MatrixFormat::csv;
    }
    if (format == MatrixFormat::matrix_market) {
        return {parse_matrix_market(in), {}, {}};
    }
    return parse_csv(in, options.header, options.labels);
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& M, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels)
{
    const bool with_rows = static_cast<Index>(row_labels.size()) == M.rows();
    if (static_cast<Index>(col_labels.size()) == M.cols() && M.cols() > 0) {
        if (with_rows) {
            out << "\"\",";
        }
        for (Index j = 0; j < M.cols(); ++j) {
            out << (j ? "," : "") << '"' << col_labels[static_cast<std::size_t>(j)] << '"';
        }
        out << '\n';
    }
    for (Index i = 0; i < M.rows(); ++i) {
        if (with_rows) {
            out << '"' << row_labels[static_cast<std::size_t>(i)] << "\",";
        }
        for (Index j = 0; j < M.cols(); ++j) {
            out << (j ? "," : "") << format_double(M(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const Matrix& M, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels)
{
    std::ofstream out(path);
    if (!out) {
        throw invalid_input("cannot write " + path);
    }
    write_matrix_csv(out, M, row_labels, col_labels);
}

} // namespace sae
