// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel similarity kernels. Each kernel has a serial reference
// implementation that the OpenMP version is tested against.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trajkit::kernels {

/// Lower-cased tokens; ASCII whitespace and punctuation separate tokens.
/// Bytes >= 0x80 are kept so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

struct NgramProfile {
  std::vector<std::string> tokens;
  std::vector<std::string> grams;  // sorted, unique; grams joined by '\x1f'
};

NgramProfile make_profile(std::string_view text, int n);

/// Jaccard similarity of the two gram sets. If either set is empty the
/// score is 1 when the token sequences are equal and 0 otherwise.
double overlap_score(const NgramProfile& a, const NgramProfile& b);

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

Matrix overlap_matrix_serial(std::span<const NgramProfile> rows, std::span<const NgramProfile> cols);
Matrix overlap_matrix(std::span<const NgramProfile> rows, std::span<const NgramProfile> cols);

/// Dot products of pre-normalised vectors (cosine similarity).
Matrix cosine_matrix_serial(std::span<const std::vector<double>> rows,
                            std::span<const std::vector<double>> cols);
Matrix cosine_matrix(std::span<const std::vector<double>> rows, std::span<const std::vector<double>> cols);

/// Scales to unit L2 norm. Throws DegenerateEmbedding for a zero or
/// non-finite vector.
std::vector<double> normalized(std::vector<double> v);

int max_threads();

}  // namespace trajkit::kernels
