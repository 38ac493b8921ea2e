#pragma once

// Second moments B and fourth-moment operators T(A) = E <A, xx^T> xx^T, both
// for weighted point sets and in closed form for a few model families.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momspec/symspace.hpp"

namespace momspec {

/// n weighted points in R^d (rows of `points`). Weights are nonnegative and
/// sum to one within 1e-12; uniform 1/n by default.
class SampleSet {
 public:
  explicit SampleSet(Eigen::MatrixXd points);
  SampleSet(Eigen::MatrixXd points, Eigen::VectorXd weights);

  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
  Eigen::VectorXd point(std::size_t i) const {
    return points_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  /// True when every weight is bit-identical to 1/n.
  bool uniform_weights() const;

  /// Pushforward by a linear map: x -> M x.
  SampleSet transformed(const Eigen::MatrixXd& m) const;
  /// Pushforward by x -> c x.
  SampleSet scaled(double c) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

/// Union of weighted sample sets: part k is included with total mass w_k.
SampleSet pool(const std::vector<std::pair<double, SampleSet>>& parts);

/// A linear operator on symmetric d x d matrices, written as a D x D
/// symmetric matrix in vech_iso coordinates (D = d(d+1)/2).
class MomentOperator {
 public:
  MomentOperator(std::size_t dim, Eigen::MatrixXd matrix, std::string provenance);

  std::size_t dim() const { return dim_; }
  std::size_t coord_dim() const { return sym_dim(dim_); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::string& provenance() const { return provenance_; }

  double trace() const { return matrix_.trace(); }
  /// Sum of squared eigenvalues, i.e. the squared Frobenius norm of the matrix.
  double frobenius_norm_sq() const { return matrix_.squaredNorm(); }

  SymMatrix apply(const SymMatrix& a) const;
  /// <T(A), A>
  double quadratic_form(const SymMatrix& a) const;

 private:
  std::size_t dim_;
  Eigen::MatrixXd matrix_;
  std::string provenance_;
};

/// Assemble an operator column by column from its action on the orthonormal
/// vech_iso basis.
MomentOperator operator_from_action(std::size_t dim,
                                    const std::function<SymMatrix(const SymMatrix&)>& action,
                                    std::string provenance);

/// Assemble an operator from a fully symmetric 4-tensor m(i, j, k, l).
MomentOperator operator_from_tensor(
    std::size_t dim,
    const std::function<double(std::size_t, std::size_t, std::size_t, std::size_t)>& tensor,
    std::string provenance);

/// Recover E[x_i x_j x_k x_l] from a fourth-moment operator.
double tensor_entry(const MomentOperator& t, std::size_t i, std::size_t j, std::size_t k,
                    std::size_t l);

/// B = sum_i w_i x_i x_i^T
SymMatrix second_moment(const SampleSet& samples);

/// Default cap on d for the dense empirical operator (D = 4656 at d = 96).
inline constexpr std::size_t kDefaultDenseLimit = 96;

struct FourthMomentOptions {
  std::size_t dense_limit = kDefaultDenseLimit;
  /// 0 means default_thread_count().
  std::size_t threads = 0;
  /// Samples per reduction block, rounded down to a multiple of 64; 0 picks
  /// a size from d alone. Blocks are merged pairwise in a fixed order.
  std::size_t block_samples = 0;
};

/// Worker count from MOMENT_SPECTRA_THREADS, else hardware concurrency.
std::size_t default_thread_count();

/// T = sum_i w_i v_i v_i^T with v_i = vech_iso(x_i x_i^T). Each entry is a
/// pairwise (tree) sum over fixed sample chunks, so the result is
/// bit-identical for every thread count.
MomentOperator fourth_moment_operator(const SampleSet& samples,
                                      const FourthMomentOptions& options = {});

/// Closed form for i.i.d. coordinates with E X = 0, E X^2 = 1, E X^4 = m4:
/// T(A) = 2A + Tr(A) I + (m4 - 3) diag(A).
MomentOperator analytic_iid(std::size_t dim, double m4);
/// N(0, B): T(A) = 2BAB + <A, B> B.
MomentOperator analytic_gaussian(const SymMatrix& covariance);
/// Uniform measure on the unit sphere S^{d-1}.
MomentOperator analytic_sphere(std::size_t dim);
/// Uniform on the 2d points +/- e_i: T(A) = diag(A) / d.
MomentOperator analytic_discrete_axes(std::size_t dim);
/// 1/2 N(0, P) + 1/2 N(0, I - P).
MomentOperator analytic_projection_mixture(const SymMatrix& projection);
/// Point mass at x.
MomentOperator analytic_dirac(const Eigen::VectorXd& point);

/// Convex combination of operators (weights positive, summing to one).
MomentOperator mixture_operator(const std::vector<std::pair<double, MomentOperator>>& parts);

/// Operator of the pushforward by x -> c x, i.e. c^4 T.
MomentOperator scale_pushforward(const MomentOperator& t, double c);

/// Prefix every point with the constant coordinate a (measure delta_a x mu).
SampleSet lift_first_order(const SampleSet& samples, double a);

/// Projection onto the first d/2 coordinates (d even).
SymMatrix coordinate_projection(std::size_t dim);

}  // namespace momspec
