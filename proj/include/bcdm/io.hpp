#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bcdm/core.hpp"

namespace bcdm {

// Headerless numeric text tables: one row per line, fields separated by
// commas and/or whitespace. Blank lines and lines starting with '#' are
// skipped. All readers throw ParseError on malformed or empty input.

IntMatrix parse_int_matrix(std::istream& in, const std::string& source = "<stream>");
IntMatrix read_int_matrix(const std::filesystem::path& path);
std::vector<int> read_int_vector(const std::filesystem::path& path);

QMatrix read_qmatrix(const std::filesystem::path& path);
ResponseMatrix read_responses(const std::filesystem::path& path);

void write_csv(std::ostream& out, const IntMatrix& m);
void write_patterns_csv(std::ostream& out, const PatternSpace& patterns);

/// Formats a value with 6 significant digits, the precision used by every
/// text output of the library.
std::string format_number(double value);

}  // namespace bcdm
