// SPDX-License-Identifier: Apache-2.0
#include "trajkit/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "trajkit/errors.hpp"

namespace trajkit::kernels {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

NgramProfile make_profile(std::string_view text, int n) {
  if (n < 1) throw PreconditionError("n-gram order must be >= 1");
  NgramProfile p;
  p.tokens = tokenize(text);
  const auto un = static_cast<size_t>(n);
  if (p.tokens.size() >= un) {
    for (size_t i = 0; i + un <= p.tokens.size(); ++i) {
      std::string g = p.tokens[i];
      for (size_t k = 1; k < un; ++k) {
        g += '\x1f';
        g += p.tokens[i + k];
      }
      p.grams.push_back(std::move(g));
    }
  }
  std::sort(p.grams.begin(), p.grams.end());
  p.grams.erase(std::unique(p.grams.begin(), p.grams.end()), p.grams.end());
  return p;
}

double overlap_score(const NgramProfile& a, const NgramProfile& b) {
  if (a.grams.empty() || b.grams.empty()) return a.tokens == b.tokens ? 1.0 : 0.0;
  size_t i = 0, j = 0, common = 0;
  while (i < a.grams.size() && j < b.grams.size()) {
    const int c = a.grams[i].compare(b.grams[j]);
    if (c == 0) {
      ++common, ++i, ++j;
    } else if (c < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  const size_t uni = a.grams.size() + b.grams.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

Matrix overlap_matrix_serial(std::span<const NgramProfile> rows, std::span<const NgramProfile> cols) {
  Matrix m(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) m.at(i, j) = overlap_score(rows[i], cols[j]);
  return m;
}

Matrix overlap_matrix(std::span<const NgramProfile> rows, std::span<const NgramProfile> cols) {
  Matrix m(rows.size(), cols.size());
  const auto n = static_cast<long>(rows.size() * cols.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long k = 0; k < n; ++k) {
    const auto i = static_cast<size_t>(k) / cols.size();
    const auto j = static_cast<size_t>(k) % cols.size();
    m.data[static_cast<size_t>(k)] = overlap_score(rows[i], cols[j]);
  }
  return m;
}

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DegenerateEmbedding("embedding dimensions differ");
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}
}  // namespace

Matrix cosine_matrix_serial(std::span<const std::vector<double>> rows,
                            std::span<const std::vector<double>> cols) {
  Matrix m(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) m.at(i, j) = dot(rows[i], cols[j]);
  return m;
}

Matrix cosine_matrix(std::span<const std::vector<double>> rows, std::span<const std::vector<double>> cols) {
  for (const auto& r : rows)
    for (const auto& c : cols)
      if (r.size() != c.size()) throw DegenerateEmbedding("embedding dimensions differ");
  Matrix m(rows.size(), cols.size());
  const auto nr = static_cast<long>(rows.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nr; ++i) {
    const auto& r = rows[static_cast<size_t>(i)];
    for (size_t j = 0; j < cols.size(); ++j) {
      double s = 0.0;
      for (size_t k = 0; k < r.size(); ++k) s += r[k] * cols[j][k];
      m.at(static_cast<size_t>(i), j) = s;
    }
  }
  return m;
}

std::vector<double> normalized(std::vector<double> v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw DegenerateEmbedding("zero or non-finite embedding");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace trajkit::kernels
