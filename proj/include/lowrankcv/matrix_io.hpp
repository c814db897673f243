#ifndef LOWRANKCV_MATRIX_IO_HPP
#define LOWRANKCV_MATRIX_IO_HPP

#include <string>
#include <string_view>

#include "lowrankcv/matrix_core.hpp"
#include "lowrankcv/missing_svd.hpp"

namespace lowrankcv {

// Two text layouts are understood. The plain format starts with a
// "rows cols" header followed by whitespace-separated values; CSV has one
// comma-separated row per line and an optional non-numeric header line.
// In both, the token NA marks a missing entry.

MaskedMatrix parse_matrix_text(std::string_view text);
MaskedMatrix parse_matrix_csv(std::string_view text);

/// Reads a matrix file; ".csv" selects the CSV layout. Throws IoError.
MaskedMatrix read_matrix(const std::string& path);

std::string format_matrix_text(const Matrix& a);
std::string format_matrix_csv(const Matrix& a);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

/// Writes `a` in the layout chosen by the extension of `path`.
void write_matrix(const std::string& path, const Matrix& a);

std::string read_file(const std::string& path);

}  // namespace lowrankcv

#endif  // LOWRANKCV_MATRIX_IO_HPP
