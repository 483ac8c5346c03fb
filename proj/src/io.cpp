#include "bcdm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bcdm/error.hpp"

namespace bcdm {

namespace {

std::vector<int> split_ints(const std::string& line, const std::string& source, int line_no) {
  std::vector<int> values;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ',' || *p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p >= end) break;
    int v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || (next < end && *next != ',' && *next != ' ' && *next != '\t' &&
                              *next != '\r')) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected an integer");
    }
    values.push_back(v);
    p = next;
  }
  return values;
}

}  // namespace

IntMatrix parse_int_matrix(std::istream& in, const std::string& source) {
  std::vector<std::vector<int>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto row = split_ints(line, source, line_no);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, found " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source + ": no data");
  IntMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

IntMatrix read_int_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_int_matrix(in, path.string());
}

std::vector<int> read_int_vector(const std::filesystem::path& path) {
  const IntMatrix m = read_int_matrix(path);
  return {m.data(), m.data() + m.size()};
}

QMatrix read_qmatrix(const std::filesystem::path& path) {
  try {
    return QMatrix(read_int_matrix(path));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ResponseMatrix read_responses(const std::filesystem::path& path) {
  try {
    return ResponseMatrix(read_int_matrix(path));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const IntMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

void write_patterns_csv(std::ostream& out, const PatternSpace& patterns) {
  write_csv(out, patterns.patterns());
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  std::ostringstream os;
  os.precision(6);
  os << value;
  return os.str();
}

}  // namespace bcdm
