#include "ife/rng.hpp"

#include <cmath>

namespace ife {

uint64_t derive_seed(uint64_t seed, uint64_t tag) {
  // One splitmix pass over the tag decorrelates streams with nearby tags.
  uint64_t z = tag + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return seed ^ (z ^ (z >> 31));
}

Rng derive_rng(uint64_t seed, uint64_t tag) { return Rng(derive_seed(seed, tag)); }

namespace {

// Modified Gram-Schmidt on the rows of a (rows x cols) matrix, rows <= cols.
void orthonormalize_rows(std::vector<double>& m, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* ri = m.data() + static_cast<size_t>(i) * cols;
    for (int j = 0; j < i; ++j) {
      const double* rj = m.data() + static_cast<size_t>(j) * cols;
      double dot = 0.0;
      for (int k = 0; k < cols; ++k) dot += ri[k] * rj[k];
      for (int k = 0; k < cols; ++k) ri[k] -= dot * rj[k];
    }
    double norm = 0.0;
    for (int k = 0; k < cols; ++k) norm += ri[k] * ri[k];
    norm = std::sqrt(norm);
    for (int k = 0; k < cols; ++k) ri[k] /= norm;
  }
}

}  // namespace

std::vector<double> orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  size_t n = static_cast<size_t>(rows) * cols;
  std::vector<double> m(n);
  for (size_t i = 0; i < n; ++i) m[i] = rng.normal();
  if (rows <= cols) {
    orthonormalize_rows(m, rows, cols);
  } else {
    // Orthonormalize the transpose, then transpose back.
    std::vector<double> t(n);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) t[static_cast<size_t>(c) * rows + r] = m[static_cast<size_t>(r) * cols + c];
    orthonormalize_rows(t, cols, rows);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m[static_cast<size_t>(r) * cols + c] = t[static_cast<size_t>(c) * rows + r];
  }
  for (double& v : m) v *= gain;
  return m;
}

Tensor orthogonal_param(const Shape& shape, double gain, Rng& rng) {
  int rows = shape[0];
  int cols = shape_size(shape) / rows;
  return Tensor::param(shape, orthogonal_matrix(rows, cols, gain, rng));
}

}  // namespace ife
