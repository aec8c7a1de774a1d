#pragma once

// Plain-text matrix files: one row per line, comma-separated decimal values,
// no header, '.' decimal separator, LF line endings. The dimension is
// inferred from the file.

#include <filesystem>
#include <string>
#include <string_view>

#include "qkp/matrix_core.hpp"

namespace qkp {

/// Parses a rectangular CSV matrix. Throws std::runtime_error on I/O failure
/// or ragged/non-numeric content.
Matrix parse_matrix_csv(std::string_view text);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double v);

std::string matrix_to_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Writes `content` verbatim; throws std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace qkp
