#include "momspec/models.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "momspec/error.hpp"
#include "momspec/rng.hpp"

namespace momspec {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the k-th sub-model, independent of the parent's own stream.
std::uint64_t child_seed(std::uint64_t seed, std::size_t k) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k) + 1));
}

void require_dim(std::size_t dim) {
  if (dim < 1) throw InvalidArgument("model dimension must be >= 1");
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

// One coordinate with mean 0, variance 1 and fourth moment m4.
double iid_coordinate(Rng& rng, double m4) {
  if (near(m4, 3.0)) return rng.normal();
  if (near(m4, 9.0 / 5.0)) return rng.uniform(-std::sqrt(3.0), std::sqrt(3.0));
  return rng.sign();
}

Eigen::VectorXd gaussian_draw(Rng& rng, const Eigen::MatrixXd& root) {
  Eigen::VectorXd g(root.cols());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
  return root * g;
}

SampleSet uniform_set(Eigen::MatrixXd points) { return SampleSet(std::move(points)); }

}  // namespace

AnalyticModel AnalyticModel::gaussian(SymMatrix covariance) {
  require_dim(covariance.dim());
  return AnalyticModel(Gaussian{std::move(covariance)});
}

AnalyticModel AnalyticModel::iid(std::size_t dim, double m4) {
  require_dim(dim);
  if (!(m4 >= 1.0)) throw InvalidArgument("iid family needs m4 >= 1, got " + std::to_string(m4));
  return AnalyticModel(Iid{dim, m4});
}

AnalyticModel AnalyticModel::projection_mixture(SymMatrix projection) {
  require_dim(projection.dim());
  return AnalyticModel(ProjectionMixture{std::move(projection)});
}

AnalyticModel AnalyticModel::projection_mixture(std::size_t dim) {
  return projection_mixture(coordinate_projection(dim));
}

AnalyticModel AnalyticModel::discrete_axes(std::size_t dim) {
  require_dim(dim);
  return AnalyticModel(DiscreteAxes{dim});
}

AnalyticModel AnalyticModel::sphere(std::size_t dim) {
  require_dim(dim);
  return AnalyticModel(Sphere{dim});
}

AnalyticModel AnalyticModel::dirac(Eigen::VectorXd point) {
  require_dim(static_cast<std::size_t>(point.size()));
  if (!point.allFinite()) throw InvalidArgument("dirac point must be finite");
  return AnalyticModel(Dirac{std::move(point)});
}

AnalyticModel AnalyticModel::scaled(AnalyticModel inner, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("scaled model needs factor > 0");
  return AnalyticModel(Scaled{std::make_shared<const AnalyticModel>(std::move(inner)), factor});
}

AnalyticModel AnalyticModel::mixture(std::vector<AnalyticModel> components, std::vector<double> weights) {
  if (components.empty() || components.size() != weights.size()) {
    throw InvalidArgument("mixture needs one weight per component");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].dim() != components.front().dim()) {
      throw DimensionError("mixture components have different dimensions");
    }
    if (!(weights[k] > 0.0)) throw InvalidArgument("mixture weights must be positive");
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture weights must sum to 1");
  return AnalyticModel(Mixture{std::move(components), std::move(weights)});
}

AnalyticModel AnalyticModel::lifted(AnalyticModel inner, double shift) {
  if (!std::isfinite(shift)) throw InvalidArgument("lift shift must be finite");
  return AnalyticModel(Lifted{std::make_shared<const AnalyticModel>(std::move(inner)), shift});
}

std::size_t AnalyticModel::dim() const {
  return std::visit(
      Overloaded{
          [](const Gaussian& m) { return m.covariance.dim(); },
          [](const Iid& m) { return m.dim; },
          [](const ProjectionMixture& m) { return m.projection.dim(); },
          [](const DiscreteAxes& m) { return m.dim; },
          [](const Sphere& m) { return m.dim; },
          [](const Dirac& m) { return static_cast<std::size_t>(m.point.size()); },
          [](const Scaled& m) { return m.inner->dim(); },
          [](const Mixture& m) { return m.components.front().dim(); },
          [](const Lifted& m) { return m.inner->dim() + 1; },
      },
      family_);
}

std::string AnalyticModel::describe() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(Overloaded{
                 [&](const Gaussian& m) { out << "gaussian(d=" << m.covariance.dim() << ")"; },
                 [&](const Iid& m) { out << "iid(d=" << m.dim << ", m4=" << m.m4 << ")"; },
                 [&](const ProjectionMixture& m) {
                   out << "projection_mixture(d=" << m.projection.dim() << ")";
                 },
                 [&](const DiscreteAxes& m) { out << "discrete_axes(d=" << m.dim << ")"; },
                 [&](const Sphere& m) { out << "sphere(d=" << m.dim << ")"; },
                 [&](const Dirac& m) { out << "dirac(d=" << m.point.size() << ")"; },
                 [&](const Scaled& m) { out << "scaled(" << m.inner->describe() << ", c=" << m.factor << ")"; },
                 [&](const Mixture& m) {
                   out << "mixture(";
                   for (std::size_t k = 0; k < m.components.size(); ++k) {
                     out << (k == 0 ? "" : ", ") << m.weights[k] << "*" << m.components[k].describe();
                   }
                   out << ")";
                 },
                 [&](const Lifted& m) { out << "lifted(" << m.inner->describe() << ", a=" << m.shift << ")"; },
             },
             family_);
  return out.str();
}

SymMatrix analytic_second_moment(const AnalyticModel& model) {
  using M = AnalyticModel;
  return std::visit(
      Overloaded{
          [](const M::Gaussian& m) { return m.covariance; },
          [](const M::Iid& m) { return SymMatrix::identity(m.dim); },
          [](const M::ProjectionMixture& m) { return 0.5 * SymMatrix::identity(m.projection.dim()); },
          [](const M::DiscreteAxes& m) {
            return (1.0 / static_cast<double>(m.dim)) * SymMatrix::identity(m.dim);
          },
          [](const M::Sphere& m) { return (1.0 / static_cast<double>(m.dim)) * SymMatrix::identity(m.dim); },
          [](const M::Dirac& m) { return SymMatrix::outer(m.point); },
          [](const M::Scaled& m) { return (m.factor * m.factor) * analytic_second_moment(*m.inner); },
          [](const M::Mixture& m) {
            SymMatrix b(m.components.front().dim());
            for (std::size_t k = 0; k < m.components.size(); ++k) {
              b += m.weights[k] * analytic_second_moment(m.components[k]);
            }
            return b;
          },
          [](const M::Lifted& m) {
            const SymMatrix inner = analytic_second_moment(*m.inner);
            SymMatrix b(inner.dim() + 1);
            b.set(0, 0, m.shift * m.shift);
            for (std::size_t i = 0; i < inner.dim(); ++i) {
              for (std::size_t j = i; j < inner.dim(); ++j) b.set(i + 1, j + 1, inner(i, j));
            }
            return b;
          },
      },
      model.family());
}

MomentOperator analytic_operator(const AnalyticModel& model) {
  using M = AnalyticModel;
  return std::visit(
      Overloaded{
          [](const M::Gaussian& m) { return analytic_gaussian(m.covariance); },
          [](const M::Iid& m) { return analytic_iid(m.dim, m.m4); },
          [](const M::ProjectionMixture& m) { return analytic_projection_mixture(m.projection); },
          [](const M::DiscreteAxes& m) { return analytic_discrete_axes(m.dim); },
          [](const M::Sphere& m) { return analytic_sphere(m.dim); },
          [](const M::Dirac& m) { return analytic_dirac(m.point); },
          [](const M::Scaled& m) { return scale_pushforward(analytic_operator(*m.inner), m.factor); },
          [](const M::Mixture& m) {
            std::vector<std::pair<double, MomentOperator>> parts;
            for (std::size_t k = 0; k < m.components.size(); ++k) {
              parts.emplace_back(m.weights[k], analytic_operator(m.components[k]));
            }
            return mixture_operator(parts);
          },
          [](const M::Lifted& m) {
            // Coordinate 0 is the constant a; odd moments of the inner
            // measure vanish, so only even counts of inner indices survive.
            const MomentOperator inner = analytic_operator(*m.inner);
            const SymMatrix b = analytic_second_moment(*m.inner);
            const double a = m.shift;
            return operator_from_tensor(
                inner.dim() + 1,
                [&](std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
                  std::size_t idx[4] = {i, j, k, l};
                  std::size_t rest[4];
                  std::size_t r = 0;
                  for (std::size_t t : idx) {
                    if (t != 0) rest[r++] = t - 1;
                  }
                  switch (r) {
                    case 0: return a * a * a * a;
                    case 2: return a * a * b(rest[0], rest[1]);
                    case 4: return tensor_entry(inner, rest[0], rest[1], rest[2], rest[3]);
                    default: return 0.0;
                  }
                },
                "lifted");
          },
      },
      model.family());
}

LabeledSamples sample_labeled(const AnalyticModel& model, std::size_t n, std::uint64_t seed) {
  using M = AnalyticModel;
  if (n < 1) throw InvalidArgument("sample: n must be >= 1");
  const auto rows = static_cast<Eigen::Index>(n);
  Rng rng(seed);
  auto unlabeled = [&](Eigen::MatrixXd points) {
    return LabeledSamples{uniform_set(std::move(points)), std::vector<std::size_t>(n, 0)};
  };

  return std::visit(
      Overloaded{
          [&](const M::Gaussian& m) {
            const Eigen::MatrixXd root = matrix_sqrt_psd(m.covariance).to_dense();
            Eigen::MatrixXd x(rows, root.cols());
            for (Eigen::Index r = 0; r < rows; ++r) x.row(r) = gaussian_draw(rng, root).transpose();
            return unlabeled(std::move(x));
          },
          [&](const M::Iid& m) {
            if (!near(m.m4, 3.0) && !near(m.m4, 9.0 / 5.0) && !near(m.m4, 1.0)) {
              throw Unsupported("iid sampling supports m4 in {1, 9/5, 3}, got " + std::to_string(m.m4));
            }
            Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(m.dim));
            for (Eigen::Index r = 0; r < rows; ++r) {
              for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = iid_coordinate(rng, m.m4);
            }
            return unlabeled(std::move(x));
          },
          [&](const M::ProjectionMixture& m) {
            const Eigen::MatrixXd p = m.projection.to_dense();
            const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(p.rows(), p.cols()) - p;
            Eigen::MatrixXd x(rows, p.cols());
            std::vector<std::size_t> labels(n);
            for (Eigen::Index r = 0; r < rows; ++r) {
              const std::size_t label = rng.uniform() < 0.5 ? 0 : 1;
              labels[static_cast<std::size_t>(r)] = label;
              // P and I - P are their own square roots
              x.row(r) = gaussian_draw(rng, label == 0 ? p : q).transpose();
            }
            return LabeledSamples{uniform_set(std::move(x)), std::move(labels)};
          },
          [&](const M::DiscreteAxes& m) {
            const auto d = static_cast<Eigen::Index>(m.dim);
            Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2 * d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
              x(2 * i, i) = 1.0;
              x(2 * i + 1, i) = -1.0;
            }
            return LabeledSamples{uniform_set(std::move(x)), std::vector<std::size_t>(2 * m.dim, 0)};
          },
          [&](const M::Sphere& m) {
            Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(m.dim));
            for (Eigen::Index r = 0; r < rows; ++r) {
              double norm = 0.0;
              while (norm == 0.0) {
                for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.normal();
                norm = x.row(r).norm();
              }
              x.row(r) /= norm;
            }
            return unlabeled(std::move(x));
          },
          [&](const M::Dirac& m) { return unlabeled(m.point.transpose().replicate(rows, 1)); },
          [&](const M::Scaled& m) {
            LabeledSamples inner = sample_labeled(*m.inner, n, seed);
            return LabeledSamples{inner.samples.scaled(m.factor), std::move(inner.labels)};
          },
          [&](const M::Mixture& m) {
            // Stratified: component k contributes ~w_k n draws pooled at mass w_k.
            std::vector<std::pair<double, SampleSet>> parts;
            std::vector<std::size_t> labels;
            for (std::size_t k = 0; k < m.components.size(); ++k) {
              const auto nk = std::max<std::size_t>(
                  1, static_cast<std::size_t>(std::llround(m.weights[k] * static_cast<double>(n))));
              SampleSet part = sample(m.components[k], nk, child_seed(seed, k));
              labels.insert(labels.end(), part.size(), k);
              parts.emplace_back(m.weights[k], std::move(part));
            }
            return LabeledSamples{pool(parts), std::move(labels)};
          },
          [&](const M::Lifted& m) {
            LabeledSamples inner = sample_labeled(*m.inner, n, seed);
            return LabeledSamples{lift_first_order(inner.samples, m.shift), std::move(inner.labels)};
          },
      },
      model.family());
}

SampleSet sample(const AnalyticModel& model, std::size_t n, std::uint64_t seed) {
  return sample_labeled(model, n, seed).samples;
}

}  // namespace momspec
