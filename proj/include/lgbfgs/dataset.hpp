#pragma once

// Binary-classification samples in LIBSVM text format.
//
// Lines read "label idx:val idx:val ..." with 1-based feature indices; they are
// stored 0-based. Labels 0/−1 map to −1 and +1/1 to +1; anything else is an
// error. Files ending in ".gz" are read through zlib.

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lgbfgs/error.hpp"
#include "lgbfgs/log.hpp"
#include "lgbfgs/types.hpp"

namespace lgbfgs {

struct SparseRow {
  std::vector<Index> indices;  // strictly increasing, 0-based
  std::vector<double> values;

  bool operator==(const SparseRow&) const = default;

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

struct Dataset {
  std::vector<SparseRow> rows;
  std::vector<int> labels;  // each +1 or -1
  Index n_features = 0;
  bool normalized = false;

  Index n_samples() const { return static_cast<Index>(rows.size()); }

  bool operator==(const Dataset&) const = default;

  double max_row_norm() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::sqrt(r.squared_norm()));
    return m;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view tok, std::size_t line, const char* what) {
  // from_chars rejects a leading '+', which LIBSVM labels commonly carry.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line);
  }
  return v;
}

inline int map_label(double raw, std::size_t line) {
  if (raw == 1.0) return 1;
  if (raw == -1.0 || raw == 0.0) return -1;
  throw ParseError("non-binary label " + std::to_string(raw), line);
}

}  // namespace detail

/// Parses LIBSVM text. When `n_features` is given it fixes d (an index beyond it is an
/// error); otherwise d is the largest index seen.
inline Dataset parse_libsvm(std::istream& in, std::optional<Index> n_features = std::nullopt) {
  Dataset ds;
  Index max_index = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = detail::trim(line.substr(0, hash));
    }
    if (line.empty()) continue;

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto next = line.find_first_of(" \t", pos);
      const auto tok = line.substr(pos, next == std::string_view::npos ? line.npos : next - pos);
      if (!tok.empty()) tokens.push_back(tok);
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }

    ds.labels.push_back(detail::map_label(detail::parse_double(tokens[0], line_no, "label"), line_no));

    SparseRow row;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto tok = tokens[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0) {
        throw ParseError("malformed feature token '" + std::string(tok) + "'", line_no);
      }
      long long idx = 0;
      const auto key = tok.substr(0, colon);
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size() || idx < 1) {
        throw ParseError("malformed feature index '" + std::string(key) + "'", line_no);
      }
      const double val = detail::parse_double(tok.substr(colon + 1), line_no, "feature value");
      if (n_features && idx > *n_features) {
        throw ParseError("feature index " + std::to_string(idx) + " exceeds declared dimension " +
                             std::to_string(*n_features),
                         line_no);
      }
      row.indices.push_back(static_cast<Index>(idx - 1));
      row.values.push_back(val);
      max_index = std::max<Index>(max_index, static_cast<Index>(idx));
    }

    // Sort by index; duplicates are malformed.
    std::vector<std::size_t> order(row.indices.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return row.indices[a] < row.indices[b]; });
    SparseRow sorted;
    for (std::size_t k : order) {
      if (!sorted.indices.empty() && sorted.indices.back() == row.indices[k]) {
        throw ParseError("duplicate feature index " + std::to_string(row.indices[k] + 1), line_no);
      }
      sorted.indices.push_back(row.indices[k]);
      sorted.values.push_back(row.values[k]);
    }
    ds.rows.push_back(std::move(sorted));
  }
  if (ds.rows.empty()) throw ParseError("no samples");
  ds.n_features = n_features ? *n_features : max_index;
  return ds;
}

inline Dataset parse_libsvm_string(const std::string& text,
                                   std::optional<Index> n_features = std::nullopt) {
  std::istringstream in(text);
  return parse_libsvm(in, n_features);
}

/// Reads a LIBSVM file; a ".gz" suffix selects gzip decompression.
inline Dataset read_libsvm_file(const std::string& path,
                                std::optional<Index> n_features = std::nullopt) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (!gz) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset '" + path + "'");
    return parse_libsvm(in, n_features);
  }
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw Error("cannot open dataset '" + path + "'");
  std::string text;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) text.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error("gzip read failed for '" + path + "'");
  return parse_libsvm_string(text, n_features);
}

/// Writes LIBSVM text with 17 significant digits so parsing recovers the same doubles.
inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  const auto old_prec = out.precision(17);
  for (Index i = 0; i < ds.n_samples(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    const auto& row = ds.rows[i];
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      out << ' ' << row.indices[k] + 1 << ':' << row.values[k];
    }
    out << '\n';
  }
  out.precision(old_prec);
}

/// Scales each nonzero row to unit Euclidean norm. Zero rows stay zero (and are reported).
inline Dataset normalize_rows(Dataset ds) {
  std::size_t zero_rows = 0;
  for (auto& row : ds.rows) {
    const double norm = std::sqrt(row.squared_norm());
    if (norm == 0.0) {
      ++zero_rows;
      continue;
    }
    if (std::abs(norm - 1.0) <= 1e-12) continue;  // already unit: keeps the map idempotent
    for (double& v : row.values) v /= norm;
  }
  if (zero_rows > 0) {
    log::warn("normalize_rows: " + std::to_string(zero_rows) + " zero row(s) left unscaled");
  }
  ds.normalized = true;
  return ds;
}

/// Appends a constant feature with value `value` at index d (d grows by one).
inline Dataset append_bias(Dataset ds, double value = 1.0) {
  for (auto& row : ds.rows) {
    row.indices.push_back(ds.n_features);
    row.values.push_back(value);
  }
  ++ds.n_features;
  ds.normalized = false;
  return ds;
}

}  // namespace lgbfgs
