#pragma once

// CSV ingestion for 1-D regression datasets: comma-separated numeric columns,
// optional single header row (auto-detected), parse errors reported with
// 1-based line numbers.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "autostat/gp.hpp"

namespace autostat {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    std::string_view field = comma == std::string_view::npos
                                 ? line.substr(start)
                                 : line.substr(start, comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
      field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' ||
                              field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_field(std::string_view field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && !field.empty();
}

}  // namespace detail

// Reads columns x_col and y_col (0-based) from a CSV file.  A header row is
// permitted only as the first row and is detected by failing to parse.
inline Dataset ingest_csv(const std::filesystem::path& path, int x_col = 0,
                          int y_col = 1, std::string x_unit = {},
                          std::string y_unit = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> xs, ys;
  std::string line;
  int line_no = 0;
  size_t need = static_cast<size_t>(std::max(x_col, y_col)) + 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    auto fields = detail::split_fields(sv);
    if (fields.size() < need)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected at least " + std::to_string(need) +
                               " columns, got " +
                               std::to_string(fields.size()));
    double x, y;
    bool ok = detail::parse_field(fields[static_cast<size_t>(x_col)], x) &&
              detail::parse_field(fields[static_cast<size_t>(y_col)], y);
    if (!ok) {
      if (line_no == 1) continue;  // header row
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": cannot parse numeric value");
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.size() < 2)
    throw std::runtime_error(path.string() + ": fewer than two data rows");
  return make_dataset(std::move(xs), std::move(ys), path.stem().string(),
                      std::move(x_unit), std::move(y_unit));
}

// All .csv files in a directory, sorted by filename for determinism.
inline std::vector<std::filesystem::path> list_csv_files(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace autostat
