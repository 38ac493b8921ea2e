#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "momspec/moments.hpp"
#include "momspec/rng.hpp"
#include "momspec/symspace.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  momspec::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline momspec::SampleSet gaussian_samples(std::size_t n, std::size_t d, std::uint64_t seed) {
  return momspec::SampleSet(
      gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), seed));
}

/// Random positive weights summing to one.
inline momspec::SampleSet weighted_samples(std::size_t n, std::size_t d, std::uint64_t seed) {
  momspec::Rng rng(seed ^ 0xabcdefULL);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.1 + rng.uniform();
  w /= w.sum();
  return momspec::SampleSet(gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), seed), w);
}

inline momspec::SymMatrix random_sym(std::size_t d, std::uint64_t seed) {
  const Eigen::MatrixXd g = gaussian_matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), seed);
  return momspec::SymMatrix::from_dense(0.5 * (g + g.transpose()));
}

inline Eigen::MatrixXd random_orthogonal(std::size_t d, std::uint64_t seed) {
  const Eigen::MatrixXd g = gaussian_matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), seed);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

inline momspec::SampleSet points(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const double x : row) m(r, c++) = x;
    ++r;
  }
  return momspec::SampleSet(m);
}

/// +/- e_i for i < d, uniform weights.
inline momspec::SampleSet axes(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(2 * i, i) = 1.0;
    m(2 * i + 1, i) = -1.0;
  }
  return momspec::SampleSet(m);
}

inline std::vector<double> sorted_desc(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  return worst;
}

}  // namespace testing
