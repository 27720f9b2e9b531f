#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sae/linalg.hpp"

namespace sae {

enum class MatrixFormat { automatic, csv, matrix_market };

MatrixFormat parse_matrix_format(const std::string& s);

struct ReadOptions {
    MatrixFormat format = MatrixFormat::automatic;
    /// nullopt: detected from whether the first row/column is numeric.
    std::optional<bool> header;
    std::optional<bool> labels;
};

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
};

LabeledMatrix read_matrix(const std::string& path, const ReadOptions& options);
LabeledMatrix parse_csv(std::istream& in, std::optional<bool> header, std::optional<bool> labels);
/// Coordinate or array MatrixMarket, general or symmetric.
Matrix parse_matrix_market(std::istream& in);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

void write_matrix_csv(std::ostream& out, const Matrix& M, const std::vector<std::string>& row_labels = {},
                      const std::vector<std::string>& col_labels = {});
void write_matrix_csv(const std::string& path, const Matrix& M, const std::vector<std::string>& row_labels = {},
                      const std::vector<std::string>& col_labels = {});

} // namespace sae
