#pragma once

// Independent reference computations. Nothing here calls into the tape or
// the kernel code under test; everything is written out with plain loops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sga/autodiff.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, std::vector<double>(cols));
  for (auto& row : m)
    for (auto& v : row) v = u(rng);
  return m;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

inline double rbf(const std::vector<double>& a, const std::vector<double>& b, double sigma) {
  return std::exp(-sq_dist(a, b) / (2.0 * sigma * sigma));
}

/// sqrt of the biased squared MMD, summed term by term.
inline double mmd(const Matrix& s, const Matrix& t, double sigma) {
  const double ns = static_cast<double>(s.size()), nt = static_cast<double>(t.size());
  double ss = 0.0, tt = 0.0, st = 0.0;
  for (const auto& a : s)
    for (const auto& b : s) ss += rbf(a, b, sigma);
  for (const auto& a : t)
    for (const auto& b : t) tt += rbf(a, b, sigma);
  for (const auto& a : s)
    for (const auto& b : t) st += rbf(a, b, sigma);
  const double sq = ss / (ns * ns) + tt / (nt * nt) - 2.0 * st / (ns * nt);
  return std::sqrt(std::max(sq, 0.0));
}

/// Median of squared distances over distinct pooled pairs, halved and rooted.
inline double median_sigma(const Matrix& a, const Matrix& b) {
  Matrix pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> d;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) d.push_back(sq_dist(pooled[i], pooled[j]));
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double med = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return med == 0.0 ? 1.0 : std::sqrt(med / 2.0);
}

inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double binary_cross_entropy(double p, int y) {
  const double pt = y == 1 ? p : 1.0 - p;
  return -std::log(pt);
}

inline double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double z = 0.0;
    for (double v : logits[i]) z += std::exp(v);
    total += -std::log(std::exp(logits[i][static_cast<std::size_t>(labels[i])]) / z);
  }
  return total / static_cast<double>(logits.size());
}

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline sga::Tensor to_tensor(const Matrix& m) { return sga::Tensor::matrix(m); }

}  // namespace oracle
