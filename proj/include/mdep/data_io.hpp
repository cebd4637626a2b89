#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mdep/errors.hpp"

namespace mdep {

/// n x p sample, row t is the observation at time t. Rows are in temporal
/// order. Construction enforces n >= 2, p >= 1 and finite entries.
class ObservationMatrix {
 public:
  explicit ObservationMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 2)
      throw DimensionError("observation matrix needs at least 2 rows, got " +
                           std::to_string(values_.rows()));
    if (values_.cols() < 1) throw DimensionError("observation matrix needs at least 1 column");
    if (!values_.allFinite()) throw DomainError("observation matrix has non-finite entries");
  }

  std::size_t n() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(std::size_t t, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd values_;
};

/// One Monte Carlo replicate outcome for one statistic.
struct ExperimentRecord {
  std::string scenario;
  std::string test;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t m_order = 0;
  std::uint64_t replicate = 0;
  double statistic = 0.0;
  double p_value = 0.0;
  bool reject = false;

  bool operator==(const ExperimentRecord&) const = default;
};

inline constexpr std::string_view kRecordHeader =
    "scenario,test,n,p,m_order,replicate,statistic,p_value,reject";

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

/// Locale-independent decimal with 17 significant digits (lossless for binary64).
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Parses rectangular numeric CSV text. A first row containing any non-numeric
/// cell is treated as a header and skipped. Blank lines are ignored.
inline ObservationMatrix parse_matrix_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool first = true;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string_view line = detail::trim(lines[li]);
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::size_t row_no = li + 1;
    std::vector<double> parsed(cells.size());
    std::size_t bad = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!detail::parse_double(cells[c], parsed[c]) || !std::isfinite(parsed[c])) {
        bad = c + 1;
        break;
      }
    }
    if (first) {
      first = false;
      cols = cells.size();
      if (bad != 0) continue;  // header row
    }
    if (cells.size() != cols)
      throw ParseError(row_no, 0,
                       "ragged CSV: row " + std::to_string(row_no) + " has " +
                           std::to_string(cells.size()) + " cells, expected " + std::to_string(cols));
    if (bad != 0)
      throw ParseError(row_no, bad,
                       "non-numeric cell at row " + std::to_string(row_no) + ", column " +
                           std::to_string(bad) + ": '" + std::string(cells[bad - 1]) + "'");
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows < 2)
    throw DimensionError("CSV has " + std::to_string(rows) + " data rows; at least 2 required");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
  return ObservationMatrix(std::move(m));
}

inline ObservationMatrix load_matrix(const std::filesystem::path& path) {
  return parse_matrix_csv(detail::read_file(path));
}

inline std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

/// Headerless CSV, one row per time point.
inline void save_matrix(const ObservationMatrix& x, const std::filesystem::path& path) {
  detail::write_file(path, format_matrix_csv(x.values()));
}

// ---------------------------------------------------------------------------
// Experiment records
// ---------------------------------------------------------------------------

inline std::string format_results_csv(const std::vector<ExperimentRecord>& records) {
  std::string out(kRecordHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.scenario;
    out += ',';
    out += r.test;
    out += ',' + std::to_string(r.n) + ',' + std::to_string(r.p) + ',' + std::to_string(r.m_order) +
           ',' + std::to_string(r.replicate) + ',' + format_double(r.statistic) + ',' +
           format_double(r.p_value) + ',' + (r.reject ? "1" : "0") + '\n';
  }
  return out;
}

inline void save_results(const std::vector<ExperimentRecord>& records,
                         const std::filesystem::path& path) {
  for (const auto& r : records)
    if (r.scenario.find_first_of(",\n") != std::string::npos ||
        r.test.find_first_of(",\n") != std::string::npos)
      throw ConfigError("scenario and test names may not contain commas or newlines");
  detail::write_file(path, format_results_csv(records));
}

inline std::vector<ExperimentRecord> parse_results_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines[0]) != kRecordHeader)
    throw ParseError(1, 0, "results CSV header mismatch");
  std::vector<ExperimentRecord> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string_view line = detail::trim(lines[li]);
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::size_t row_no = li + 1;
    if (cells.size() != 9) throw ParseError(row_no, 0, "results row has wrong cell count");
    ExperimentRecord r;
    r.scenario = std::string(cells[0]);
    r.test = std::string(cells[1]);
    auto as_uint = [&](std::size_t c) {
      std::uint64_t v = 0;
      const auto res = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (res.ec != std::errc() || res.ptr != cells[c].data() + cells[c].size())
        throw ParseError(row_no, c + 1, "expected an integer");
      return v;
    };
    auto as_double = [&](std::size_t c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) throw ParseError(row_no, c + 1, "expected a number");
      return v;
    };
    r.n = as_uint(2);
    r.p = as_uint(3);
    r.m_order = as_uint(4);
    r.replicate = as_uint(5);
    r.statistic = as_double(6);
    r.p_value = as_double(7);
    if (cells[8] != "0" && cells[8] != "1") throw ParseError(row_no, 9, "reject flag must be 0 or 1");
    r.reject = cells[8] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ExperimentRecord> load_results(const std::filesystem::path& path) {
  return parse_results_csv(detail::read_file(path));
}

}  // namespace mdep
