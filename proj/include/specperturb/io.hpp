#ifndef SPECPERTURB_IO_HPP
#define SPECPERTURB_IO_HPP

// CSV formats used by the command line tool. Matrices are plain rows of
// comma-separated reals written with 17 significant digits; labels are one
// integer per line; masks are row,col,value triples. Writes go to a
// temporary file that is renamed into place.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <utility>
#include <vector>

#include "specperturb/completion.hpp"
#include "specperturb/numkernel.hpp"

namespace specperturb::io {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InvalidArgument("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += format_double(m(i, j));
    }
    s += '\n';
  }
  return s;
}

inline std::string labels_to_csv(const std::vector<int>& labels) {
  std::string s;
  for (int l : labels) s += std::to_string(l) + '\n';
  return s;
}

inline std::string partial_to_csv(const PartialMatrix& pm) {
  std::string s;
  for (std::size_t e = 0; e < pm.values.size(); ++e) {
    const auto [i, j] = pm.mask.entries[e];
    s += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(pm.values[e]) + '\n';
  }
  return s;
}

inline void write_matrix(const std::filesystem::path& p, const Matrix& m) { write_atomic(p, matrix_to_csv(m)); }
inline void write_labels(const std::filesystem::path& p, const std::vector<int>& l) { write_atomic(p, labels_to_csv(l)); }
inline void write_partial(const std::filesystem::path& p, const PartialMatrix& pm) {
  write_atomic(p, partial_to_csv(pm));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline double parse_real(std::string_view tok, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw InvalidArgument(where(path, line) + "cannot parse '" + std::string(tok) + "' as a real number");
  if (!std::isfinite(v)) throw InvalidArgument(where(path, line) + "non-finite value");
  return v;
}

inline long parse_int(std::string_view tok, const std::string& path, std::size_t line) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw InvalidArgument(where(path, line) + "cannot parse '" + std::string(tok) + "' as an integer");
  return v;
}

/// Non-blank lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!trim(line).empty()) out.emplace_back(n, line);
  }
  return out;
}

}  // namespace detail

inline Matrix read_matrix(const std::filesystem::path& path) {
  const std::string name = path.string();
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw InvalidArgument(name + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (const auto& [ln, text] : lines) {
    std::vector<double> row;
    for (std::string_view tok : detail::split(text)) row.push_back(detail::parse_real(tok, name, ln));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(detail::where(name, ln) + "expected " + std::to_string(rows.front().size()) +
                            " columns, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::vector<int> out;
  for (const auto& [ln, text] : detail::read_lines(path)) {
    const long v = detail::parse_int(detail::trim(text), name, ln);
    if (v < 0 || v > 1000000000L) throw InvalidArgument(detail::where(name, ln) + "label must be a non-negative integer");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw InvalidArgument(name + ": empty labels file");
  return out;
}

/// Reads row,col,value triples. The shape defaults to one past the largest
/// index seen in each direction.
inline PartialMatrix read_partial(const std::filesystem::path& path, std::optional<Eigen::Index> rows = std::nullopt,
                                  std::optional<Eigen::Index> cols = std::nullopt) {
  const std::string name = path.string();
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::pair<double, std::size_t>> cells;
  Eigen::Index max_r = -1, max_c = -1;
  for (const auto& [ln, text] : detail::read_lines(path)) {
    const auto toks = detail::split(text);
    if (toks.size() != 3) throw InvalidArgument(detail::where(name, ln) + "expected row,col,value");
    const long r = detail::parse_int(toks[0], name, ln);
    const long c = detail::parse_int(toks[1], name, ln);
    if (r < 0 || c < 0) throw InvalidArgument(detail::where(name, ln) + "negative index");
    const double v = detail::parse_real(toks[2], name, ln);
    const auto key = std::make_pair(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (auto it = cells.find(key); it != cells.end())
      throw InvalidArgument(detail::where(name, ln) + "duplicate entry, first seen on line " +
                            std::to_string(it->second.second));
    cells.emplace(key, std::make_pair(v, ln));
    max_r = std::max(max_r, key.first);
    max_c = std::max(max_c, key.second);
  }
  if (cells.empty()) throw InvalidArgument(name + ": no observed entries");
  PartialMatrix pm;
  pm.mask.rows = rows.value_or(max_r + 1);
  pm.mask.cols = cols.value_or(max_c + 1);
  for (const auto& [key, val] : cells) {
    if (key.first >= pm.mask.rows || key.second >= pm.mask.cols)
      throw InvalidArgument(detail::where(name, val.second) + "index outside the declared shape");
    pm.mask.entries.push_back(key);
    pm.values.push_back(val.first);
  }
  return pm;
}

}  // namespace specperturb::io

#endif  // SPECPERTURB_IO_HPP
