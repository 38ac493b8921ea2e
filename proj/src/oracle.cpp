#include "momspec/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "momspec/error.hpp"

namespace momspec {

namespace {

class Fnv1a {
 public:
  template <class T>
  void feed(const T& value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (const unsigned char b : bytes) {
      hash_ ^= b;
      hash_ *= 1099511628211ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ULL;
};

void require_split_instance(const SampleSet& samples, const char* who) {
  const std::size_t n = samples.size();
  if (n > kOracleMaxAtoms) {
    throw Unsupported(std::string(who) + ": n = " + std::to_string(n) + " exceeds the enumeration limit " +
                      std::to_string(kOracleMaxAtoms));
  }
  if (!samples.uniform_weights()) throw Unsupported(std::string(who) + ": needs uniform weights");
}

// Enumerate all subsets of size k in Gray-code order, tracking
// c_in sum_S x x^T - c_out sum_{not S} x x^T incrementally.
OracleResult enumerate_splits(const SampleSet& samples, std::size_t k, double c_in, double c_out) {
  const std::size_t n = samples.size();
  std::vector<Eigen::MatrixXd> outer(n);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples.dim()),
                                                static_cast<Eigen::Index>(samples.dim()));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd x = samples.point(i);
    outer[i] = x * x.transpose();
    delta -= c_out * outer[i];
  }
  const double step = c_in + c_out;

  auto value_of = [](const Eigen::MatrixXd& m) { return 0.5 * m.norm(); };
  double best = -1.0;
  std::uint64_t best_mask = 0;
  std::uint64_t mask = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t g = 0; g < total; ++g) {
    if (g != 0) {
      const int bit = std::countr_zero(g);
      mask ^= std::uint64_t{1} << bit;
      if ((mask >> bit) & 1U) {
        delta += step * outer[static_cast<std::size_t>(bit)];
      } else {
        delta -= step * outer[static_cast<std::size_t>(bit)];
      }
    }
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    const double v = value_of(delta);
    // drift from the incremental updates is far below this tie window
    const double window = 1e-12 * std::max(best, 1e-300);
    if (v > best + window || (std::abs(v - best) <= window && mask < best_mask)) {
      best = v;
      best_mask = mask;
    }
  }

  Eigen::MatrixXd exact = Eigen::MatrixXd::Zero(delta.rows(), delta.cols());
  for (std::size_t i = 0; i < n; ++i) exact += ((best_mask >> i) & 1U ? c_in : -c_out) * outer[i];
  OracleResult out;
  out.value = value_of(exact);
  out.mask = best_mask;
  out.instance_hash = instance_hash(samples);
  return out;
}

// Power sums of the sample against all monomials of degree p in d <= 3
// variables, pre-multiplied by the multinomial coefficient, so that
// sum_i w_i <x_i, v>^p = sum_m coef_m v^m. `magnitude` holds the same sums
// over |x| and bounds the cancellation in that expansion.
struct MomentPolynomial {
  std::vector<std::array<int, 3>> exponents;
  std::vector<double> coefs;
  std::vector<double> magnitude;
  int degree = 0;

  MomentPolynomial(const SampleSet& samples, int p) : degree(p) {
    const int d = static_cast<int>(samples.dim());
    std::vector<double> factorial(static_cast<std::size_t>(p) + 1, 1.0);
    for (int i = 1; i <= p; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i) - 1] * i;
    for (int a = p; a >= 0; --a) {
      for (int b = p - a; b >= 0; --b) {
        const int c = p - a - b;
        if ((d < 2 && b > 0) || (d < 3 && c > 0)) continue;
        exponents.push_back({a, b, c});
      }
    }
    const Eigen::MatrixXd& x = samples.points();
    for (const auto& e : exponents) {
      double sum = 0.0;
      double abs_sum = 0.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double term = samples.weights()(i);
        for (int j = 0; j < d; ++j) term *= std::pow(x(i, j), e[static_cast<std::size_t>(j)]);
        sum += term;
        abs_sum += std::abs(term);
      }
      const double multinomial = factorial[static_cast<std::size_t>(p)] /
                                 (factorial[static_cast<std::size_t>(e[0])] * factorial[static_cast<std::size_t>(e[1])] *
                                  factorial[static_cast<std::size_t>(e[2])]);
      coefs.push_back(multinomial * sum);
      magnitude.push_back(multinomial * abs_sum);
    }
  }

  struct Value {
    double sum;
    double scale;  ///< sum of |terms|; rounding error is a small multiple of eps * scale
  };

  Value operator()(const std::array<double, 3>& v) const {
    std::array<std::array<double, 9>, 3> powers{};
    for (std::size_t j = 0; j < 3; ++j) {
      powers[j][0] = 1.0;
      for (int e = 1; e <= degree; ++e) powers[j][static_cast<std::size_t>(e)] = powers[j][static_cast<std::size_t>(e) - 1] * v[j];
    }
    Value out{0.0, 0.0};
    for (std::size_t m = 0; m < coefs.size(); ++m) {
      const auto& e = exponents[m];
      const double mono = powers[0][static_cast<std::size_t>(e[0])] * powers[1][static_cast<std::size_t>(e[1])] *
                          powers[2][static_cast<std::size_t>(e[2])];
      out.sum += coefs[m] * mono;
      out.scale += magnitude[m] * std::abs(mono);
    }
    return out;
  }
};

struct BetaObjective {
  const SampleSet& samples;
  MomentPolynomial num;
  MomentPolynomial den;
  double null_threshold;

  // Direct sums over the atoms, for directions where the expansion cancels.
  std::pair<double, double> direct(const std::array<double, 3>& v) const {
    const Eigen::MatrixXd& x = samples.points();
    double n = 0.0;
    double q = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double y = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) y += x(i, j) * v[static_cast<std::size_t>(j)];
      const double y2 = y * y;
      const double y4 = y2 * y2;
      n += samples.weights()(i) * (num.degree == 4 ? y4 : y4 * y4);
      q += samples.weights()(i) * y2;
    }
    return {n, q};
  }

  // negative when the direction misses the support
  double operator()(const std::array<double, 3>& v) const {
    constexpr double kReliable = 1e-6;  // keep ~10 of 16 digits after cancellation
    const double norm_sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    const auto pn = num(v);
    const auto pq = den(v);
    double n = pn.sum;
    double q = pq.sum;
    if (!(n > kReliable * pn.scale) || !(q > kReliable * pq.scale)) std::tie(n, q) = direct(v);
    if (!(q > null_threshold * norm_sq)) return -1.0;
    return std::pow(std::max(n, 0.0), 1.0 / num.degree) / std::sqrt(q);
  }
};

struct GridPoint {
  double value;
  std::array<double, 3> v;
};

GridPoint ascend(const BetaObjective& f, GridPoint start, std::size_t dim, double h) {
  while (h > 1e-13) {
    bool improved = false;
    for (std::size_t j = 0; j < dim; ++j) {
      for (const double step : {h, -h}) {
        std::array<double, 3> trial = start.v;
        trial[j] += step;
        const double value = f(trial);
        if (value > start.value) {
          start = {value, trial};
          improved = true;
        }
      }
    }
    const double norm = std::sqrt(start.v[0] * start.v[0] + start.v[1] * start.v[1] + start.v[2] * start.v[2]);
    for (double& c : start.v) c /= norm;
    if (!improved) h *= 0.5;
  }
  return start;
}

}  // namespace

std::uint64_t instance_hash(const SampleSet& samples) {
  Fnv1a h;
  h.feed(static_cast<std::uint64_t>(samples.size()));
  h.feed(static_cast<std::uint64_t>(samples.dim()));
  const Eigen::MatrixXd& x = samples.points();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) h.feed(x(i, j));
  }
  for (Eigen::Index i = 0; i < samples.weights().size(); ++i) h.feed(samples.weights()(i));
  return h.value();
}

OracleResult s_exact_small(const SampleSet& samples) {
  require_split_instance(samples, "s_exact_small");
  const std::size_t n = samples.size();
  if (n % 2 != 0) throw Unsupported("s_exact_small: n must be even, got " + std::to_string(n));
  const double c = 2.0 / static_cast<double>(n);
  OracleResult out = enumerate_splits(samples, n / 2, c, c);
  out.method = "balanced-subset-enumeration";
  return out;
}

OracleResult s_weighted_exact_small(const SampleSet& samples, double alpha) {
  require_split_instance(samples, "s_weighted_exact_small");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw InvalidArgument("s_weighted_exact_small: alpha must lie in (0, 1/2]");
  const std::size_t n = samples.size();
  const double k_real = alpha * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::llround(k_real));
  if (std::abs(k_real - static_cast<double>(k)) > 1e-9 || k < 1) {
    throw Unsupported("s_weighted_exact_small: alpha * n must be a positive integer");
  }
  OracleResult out =
      enumerate_splits(samples, k, 1.0 / static_cast<double>(k), 1.0 / static_cast<double>(n - k));
  out.method = "weighted-subset-enumeration";
  return out;
}

OracleResult beta_exact_small(const SampleSet& samples, int p, double resolution) {
  if (p != 4 && p != 8) throw InvalidArgument("beta_exact_small: p must be 4 or 8");
  const std::size_t d = samples.dim();
  if (d > 3) throw Unsupported("beta_exact_small: d = " + std::to_string(d) + " > 3");
  if (!(resolution > 0.0) || resolution > kBetaGridResolution) {
    throw InvalidArgument("beta_exact_small: resolution must lie in (0, 1e-3]");
  }
  const double trace_b = samples.points().squaredNorm() == 0.0
                             ? 0.0
                             : (samples.points().transpose() * samples.weights().asDiagonal() * samples.points()).trace();
  if (!(trace_b > 0.0)) throw DegenerateMeasure("beta_exact_small: every point is at the origin");
  const BetaObjective f{samples, MomentPolynomial(samples, p), MomentPolynomial(samples, 2), 1e-14 * trace_b};

  constexpr std::size_t kSeeds = 8;
  std::vector<GridPoint> best;  // descending, at most kSeeds
  auto offer = [&](const std::array<double, 3>& v) {
    const double value = f(v);
    if (value < 0.0) return;
    if (best.size() == kSeeds && value <= best.back().value) return;
    const auto pos = std::upper_bound(best.begin(), best.end(), value,
                                      [](double x, const GridPoint& g) { return x > g.value; });
    best.insert(pos, {value, v});
    if (best.size() > kSeeds) best.pop_back();
  };

  if (d == 1) {
    offer({1.0, 0.0, 0.0});
  } else if (d == 2) {
    const auto count = static_cast<std::size_t>(std::ceil(std::numbers::pi / resolution));
    for (std::size_t k = 0; k < count; ++k) {
      const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      offer({std::cos(theta), std::sin(theta), 0.0});
    }
  } else {
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / (resolution * resolution)));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * static_cast<double>(k);
      offer({r * std::cos(phi), r * std::sin(phi), z});
    }
  }
  if (best.empty()) throw DegenerateMeasure("beta_exact_small: no grid direction meets the support");

  GridPoint top = best.front();
  if (d > 1) {
    for (const GridPoint& g : best) {
      const GridPoint refined = ascend(f, g, d, resolution);
      if (refined.value > top.value) top = refined;
    }
  }
  OracleResult out;
  out.value = top.value;
  out.direction = Eigen::Map<const Eigen::VectorXd>(top.v.data(), static_cast<Eigen::Index>(d));
  out.instance_hash = instance_hash(samples);
  out.method = d == 3 ? "fibonacci-grid+ascent" : d == 2 ? "angle-grid+ascent" : "trivial";
  return out;
}

MomentOperator t_operator_brute(const SampleSet& samples) {
  const std::size_t n = samples.size();
  const std::size_t d = samples.dim();
  if (n > 200 || d > 6) {
    throw CapacityError("t_operator_brute: limited to n <= 200 and d <= 6 (got n = " + std::to_string(n) +
                        ", d = " + std::to_string(d) + ")");
  }
  const auto coords = static_cast<Eigen::Index>(sym_dim(d));
  std::vector<SymMatrix> outer;
  for (std::size_t i = 0; i < n; ++i) outer.push_back(SymMatrix::outer(samples.point(i)));
  Eigen::MatrixXd m(coords, coords);
  for (Eigen::Index k = 0; k < coords; ++k) {
    const SymMatrix basis = vech_iso_inv(CoordVector::Unit(coords, k));
    SymMatrix image(d);
    for (std::size_t i = 0; i < n; ++i) image += (samples.weight(i) * frobenius_inner(basis, outer[i])) * outer[i];
    m.col(k) = vech_iso(image);
  }
  return MomentOperator(d, std::move(m), "brute");
}

}  // namespace momspec
