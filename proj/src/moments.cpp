#include "momspec/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <string>
#include <thread>

#include "momspec/error.hpp"

namespace momspec {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Samples per leaf of the reduction tree.
constexpr std::size_t kLeafSamples = 64;
// Upper bound on the vech block held in memory at once (doubles).
constexpr std::size_t kBlockBudget = std::size_t{1} << 25;

double vech_scale(std::size_t i, std::size_t j) { return i == j ? 1.0 : kSqrt2; }

std::size_t coord_index(std::size_t d, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return i * d - (i * (i + 1)) / 2 + j;
}

// Sum of a[t] * b[t] over [0, len), with four interleaved accumulators.
double leaf_dot(const double* a, const double* b, std::size_t len) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t t = 0;
  for (; t + 4 <= len; t += 4) {
    s0 += a[t] * b[t];
    s1 += a[t + 1] * b[t + 1];
    s2 += a[t + 2] * b[t + 2];
    s3 += a[t + 3] * b[t + 3];
  }
  for (; t < len; ++t) s0 += a[t] * b[t];
  return (s0 + s1) + (s2 + s3);
}

double pairwise_dot(const double* a, const double* b, std::size_t len) {
  if (len <= kLeafSamples) return leaf_dot(a, b, len);
  // split on a leaf boundary so the tree shape depends only on len
  const std::size_t leaves = (len + kLeafSamples - 1) / kLeafSamples;
  const std::size_t half = (leaves / 2) * kLeafSamples;
  return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, len - half);
}

// Upper triangle of sum_i w_i v_i v_i^T for samples [first, first + m).
Eigen::MatrixXd block_gram(const SampleSet& samples, std::size_t first, std::size_t m,
                           std::size_t threads) {
  const std::size_t d = samples.dim();
  const std::size_t coords = sym_dim(d);
  // row-major coords x m, so each coordinate is contiguous across samples
  std::vector<double> v(coords * m);
  std::vector<double> wv(coords * m);
  const Eigen::MatrixXd& x = samples.points();
  for (std::size_t s = 0; s < m; ++s) {
    const auto row = static_cast<Eigen::Index>(first + s);
    const double w = samples.weights()(row);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x(row, static_cast<Eigen::Index>(i));
      for (std::size_t j = i; j < d; ++j, ++k) {
        const double value = vech_scale(i, j) * xi * x(row, static_cast<Eigen::Index>(j));
        v[k * m + s] = value;
        wv[k * m + s] = w * value;
      }
    }
  }

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(coords),
                                            static_cast<Eigen::Index>(coords));
  auto work = [&](std::size_t worker) {
    for (std::size_t a = worker; a < coords; a += threads) {
      for (std::size_t b = a; b < coords; ++b) {
        g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            pairwise_dot(&wv[a * m], &v[b * m], m);
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  return g;
}

}  // namespace

SampleSet::SampleSet(Eigen::MatrixXd points)
    : SampleSet(points, Eigen::VectorXd::Constant(points.rows(), points.rows() == 0
                                                                    ? 0.0
                                                                    : 1.0 / static_cast<double>(points.rows()))) {}

SampleSet::SampleSet(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() < 1) throw InvalidArgument("sample set needs at least one point");
  if (points_.cols() < 1) throw InvalidArgument("sample set needs dimension >= 1");
  if (weights_.size() != points_.rows()) {
    throw DimensionError("sample set: " + std::to_string(points_.rows()) + " points but " +
                         std::to_string(weights_.size()) + " weights");
  }
  if (!points_.allFinite()) throw InvalidArgument("sample set has non-finite coordinates");
  if (!weights_.allFinite() || weights_.minCoeff() < 0.0) {
    throw InvalidArgument("sample weights must be finite and nonnegative");
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("sample weights sum to " + std::to_string(total) + ", expected 1");
  }
}

bool SampleSet::uniform_weights() const {
  const double w = 1.0 / static_cast<double>(size());
  return (weights_.array() == w).all();
}

SampleSet SampleSet::transformed(const Eigen::MatrixXd& m) const {
  if (m.cols() != points_.cols()) throw DimensionError("transformed: map has wrong input dimension");
  return SampleSet(points_ * m.transpose(), weights_);
}

SampleSet SampleSet::scaled(double c) const { return SampleSet(points_ * c, weights_); }

SampleSet pool(const std::vector<std::pair<double, SampleSet>>& parts) {
  if (parts.empty()) throw InvalidArgument("pool: no parts");
  const Eigen::Index d = parts.front().second.points().cols();
  Eigen::Index n = 0;
  for (const auto& [w, s] : parts) {
    if (s.points().cols() != d) throw DimensionError("pool: parts have different dimensions");
    if (!(w > 0.0)) throw InvalidArgument("pool: part weights must be positive");
    n += s.points().rows();
  }
  Eigen::MatrixXd points(n, d);
  Eigen::VectorXd weights(n);
  Eigen::Index row = 0;
  for (const auto& [w, s] : parts) {
    points.middleRows(row, s.points().rows()) = s.points();
    weights.segment(row, s.points().rows()) = w * s.weights();
    row += s.points().rows();
  }
  return SampleSet(std::move(points), std::move(weights));
}

MomentOperator::MomentOperator(std::size_t dim, Eigen::MatrixXd matrix, std::string provenance)
    : dim_(dim), matrix_(std::move(matrix)), provenance_(std::move(provenance)) {
  const auto coords = static_cast<Eigen::Index>(sym_dim(dim_));
  if (matrix_.rows() != coords || matrix_.cols() != coords) {
    throw DimensionError("moment operator for d = " + std::to_string(dim_) + " must be " +
                         std::to_string(coords) + "x" + std::to_string(coords));
  }
  if (!matrix_.allFinite()) throw InvalidArgument("moment operator has non-finite entries");
  if (coords > 0) {
    const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * matrix_.norm()) {
      throw InvalidArgument("moment operator matrix is not symmetric");
    }
    matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
  }
}

SymMatrix MomentOperator::apply(const SymMatrix& a) const {
  if (a.dim() != dim_) throw DimensionError("MomentOperator::apply: dimension mismatch");
  return vech_iso_inv(matrix_ * vech_iso(a));
}

double MomentOperator::quadratic_form(const SymMatrix& a) const {
  if (a.dim() != dim_) throw DimensionError("MomentOperator::quadratic_form: dimension mismatch");
  const CoordVector v = vech_iso(a);
  return v.dot(matrix_ * v);
}

MomentOperator operator_from_action(std::size_t dim,
                                    const std::function<SymMatrix(const SymMatrix&)>& action,
                                    std::string provenance) {
  const auto coords = static_cast<Eigen::Index>(sym_dim(dim));
  Eigen::MatrixXd m(coords, coords);
  for (Eigen::Index k = 0; k < coords; ++k) {
    const SymMatrix basis = vech_iso_inv(CoordVector::Unit(coords, k));
    m.col(k) = vech_iso(action(basis));
  }
  return MomentOperator(dim, 0.5 * (m + m.transpose()), std::move(provenance));
}

MomentOperator operator_from_tensor(
    std::size_t dim,
    const std::function<double(std::size_t, std::size_t, std::size_t, std::size_t)>& tensor,
    std::string provenance) {
  const auto coords = static_cast<Eigen::Index>(sym_dim(dim));
  Eigen::MatrixXd m(coords, coords);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j, ++r) {
      Eigen::Index c = 0;
      for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t l = k; l < dim; ++l, ++c) {
          m(r, c) = vech_scale(i, j) * vech_scale(k, l) * tensor(i, j, k, l);
        }
      }
    }
  }
  return MomentOperator(dim, 0.5 * (m + m.transpose()), std::move(provenance));
}

double tensor_entry(const MomentOperator& t, std::size_t i, std::size_t j, std::size_t k,
                    std::size_t l) {
  const std::size_t d = t.dim();
  const auto r = static_cast<Eigen::Index>(coord_index(d, i, j));
  const auto c = static_cast<Eigen::Index>(coord_index(d, k, l));
  return t.matrix()(r, c) / (vech_scale(i, j) * vech_scale(k, l));
}

SymMatrix second_moment(const SampleSet& samples) {
  const Eigen::MatrixXd& x = samples.points();
  const Eigen::MatrixXd b = x.transpose() * samples.weights().asDiagonal() * x;
  SymMatrix out(samples.dim());
  for (std::size_t i = 0; i < samples.dim(); ++i) {
    for (std::size_t j = i; j < samples.dim(); ++j) {
      out.set(i, j, b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("MOMENT_SPECTRA_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MomentOperator fourth_moment_operator(const SampleSet& samples, const FourthMomentOptions& options) {
  const std::size_t d = samples.dim();
  if (d > options.dense_limit) {
    throw CapacityError("dense fourth-moment operator limited to d <= " +
                        std::to_string(options.dense_limit) + " (got d = " + std::to_string(d) +
                        "); use the matrix-free top-k path or raise the dense limit");
  }
  const std::size_t coords = sym_dim(d);
  const std::size_t n = samples.size();
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(options.threads == 0 ? default_thread_count() : options.threads,
                                        coords));

  // Blocks are whole numbers of leaves, so the per-entry reduction tree is a
  // function of (n, d) only.
  std::size_t block = options.block_samples != 0 ? options.block_samples
                                                 : kBlockBudget / std::max<std::size_t>(coords, 1);
  block = std::max(kLeafSamples, (block / kLeafSamples) * kLeafSamples);

  // Binary-counter merge of block results: level k holds the sum of 2^k blocks.
  std::vector<std::optional<Eigen::MatrixXd>> levels;
  for (std::size_t first = 0; first < n; first += block) {
    Eigen::MatrixXd carry = block_gram(samples, first, std::min(block, n - first), threads);
    std::size_t level = 0;
    while (level < levels.size() && levels[level].has_value()) {
      carry = (*levels[level] + carry).eval();
      levels[level].reset();
      ++level;
    }
    if (level == levels.size()) levels.emplace_back();
    levels[level] = std::move(carry);
  }
  Eigen::MatrixXd total;
  for (auto& level : levels) {
    if (!level.has_value()) continue;
    total = total.size() == 0 ? std::move(*level) : (*level + total).eval();
  }
  total = total.selfadjointView<Eigen::Upper>();
  return MomentOperator(d, std::move(total), "empirical");
}

MomentOperator analytic_iid(std::size_t dim, double m4) {
  if (!(m4 >= 1.0)) {
    throw InvalidArgument("iid family needs E X^4 >= (E X^2)^2 = 1, got m4 = " + std::to_string(m4));
  }
  return operator_from_action(
      dim,
      [&](const SymMatrix& a) {
        SymMatrix out = 2.0 * a + a.trace() * SymMatrix::identity(dim);
        for (std::size_t i = 0; i < dim; ++i) out.add(i, i, (m4 - 3.0) * a(i, i));
        return out;
      },
      "iid(m4=" + std::to_string(m4) + ")");
}

MomentOperator analytic_gaussian(const SymMatrix& covariance) {
  const SmallSpectrum spec = eig_sym_small(covariance);
  if (spec.eigenvalues.size() > 0) {
    const double top = std::max(spec.eigenvalues(0), 0.0);
    const double low = spec.eigenvalues(spec.eigenvalues.size() - 1);
    if (low < -1e-10 * top || (top == 0.0 && low < 0.0)) {
      throw NotPsdError("gaussian covariance is not PSD (eigenvalue " + std::to_string(low) + ")");
    }
  }
  return operator_from_action(
      covariance.dim(),
      [&](const SymMatrix& a) {
        return 2.0 * congruence(covariance, a) + frobenius_inner(a, covariance) * covariance;
      },
      "gaussian");
}

MomentOperator analytic_sphere(std::size_t dim) {
  if (dim < 1) throw InvalidArgument("sphere needs d >= 1");
  const double dd = static_cast<double>(dim);
  const MomentOperator gauss = analytic_iid(dim, 3.0);
  return MomentOperator(dim, gauss.matrix() / (dd * (dd + 2.0)), "sphere");
}

MomentOperator analytic_discrete_axes(std::size_t dim) {
  if (dim < 1) throw InvalidArgument("discrete axes need d >= 1");
  const double dd = static_cast<double>(dim);
  return operator_from_action(
      dim,
      [&](const SymMatrix& a) {
        SymMatrix out(dim);
        for (std::size_t i = 0; i < dim; ++i) out.set(i, i, a(i, i) / dd);
        return out;
      },
      "discrete_axes");
}

MomentOperator analytic_projection_mixture(const SymMatrix& projection) {
  const std::size_t d = projection.dim();
  const Eigen::MatrixXd p = projection.to_dense();
  if ((p * p - p).norm() > 1e-10 * std::max(1.0, p.norm())) {
    throw InvalidArgument("projection_mixture: matrix is not an orthogonal projection");
  }
  const SymMatrix complement = SymMatrix::identity(d) - projection;
  MomentOperator mixed =
      mixture_operator({{0.5, analytic_gaussian(projection)}, {0.5, analytic_gaussian(complement)}});
  return MomentOperator(d, mixed.matrix(), "projection_mixture");
}

MomentOperator analytic_dirac(const Eigen::VectorXd& point) {
  const CoordVector v = vech_iso(SymMatrix::outer(point));
  return MomentOperator(static_cast<std::size_t>(point.size()), v * v.transpose(), "dirac");
}

MomentOperator mixture_operator(const std::vector<std::pair<double, MomentOperator>>& parts) {
  if (parts.empty()) throw InvalidArgument("mixture_operator: no parts");
  const std::size_t d = parts.front().second.dim();
  double total = 0.0;
  for (const auto& [w, t] : parts) {
    if (t.dim() != d) throw DimensionError("mixture_operator: parts have different dimensions");
    if (!(w > 0.0)) throw InvalidArgument("mixture_operator: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("mixture_operator: weights sum to " + std::to_string(total));
  }
  if (parts.size() == 1) return parts.front().second;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(parts.front().second.matrix().rows(),
                                            parts.front().second.matrix().cols());
  for (const auto& [w, t] : parts) m += w * t.matrix();
  return MomentOperator(d, std::move(m), "mixture");
}

MomentOperator scale_pushforward(const MomentOperator& t, double c) {
  if (!(c > 0.0)) throw InvalidArgument("scale_pushforward: c must be positive");
  if (c == 1.0) return t;
  const double c2 = c * c;
  return MomentOperator(t.dim(), (c2 * c2) * t.matrix(), t.provenance());
}

SampleSet lift_first_order(const SampleSet& samples, double a) {
  Eigen::MatrixXd points(samples.points().rows(), samples.points().cols() + 1);
  points.col(0).setConstant(a);
  points.rightCols(samples.points().cols()) = samples.points();
  return SampleSet(std::move(points), samples.weights());
}

SymMatrix coordinate_projection(std::size_t dim) {
  if (dim % 2 != 0) throw InvalidArgument("coordinate_projection: d must be even");
  SymMatrix p(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) p.set(i, i, 1.0);
  return p;
}

}  // namespace momspec
