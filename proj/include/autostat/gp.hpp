#pragma once

// Gaussian process regression on one-dimensional inputs: dataset ingestion
// and standardization, log marginal likelihood with analytic gradients,
// multi-restart hyperparameter optimization, BIC scoring, posterior
// prediction, and the additive posterior decomposition of a sum-of-products
// kernel.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "autostat/eval.hpp"
#include "autostat/kernel.hpp"
#include "autostat/normal_form.hpp"
#include "autostat/optimizer.hpp"
#include "autostat/rng.hpp"

namespace autostat {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// ---- dataset ----

struct Dataset {
  std::vector<double> xs;  // sorted ascending
  std::vector<double> ys;  // matching order, original units
  std::string name;
  std::string x_unit;
  std::string y_unit;
  double y_mean = 0.0;
  double y_std = 1.0;  // set to 1 when y is constant
  double x_mean = 0.0;
  double x_std = 1.0;

  int n() const { return static_cast<int>(xs.size()); }
  double x_min() const { return xs.front(); }
  double x_max() const { return xs.back(); }
  double x_range() const { return xs.back() - xs.front(); }
  // Guarded range for initialization scales on degenerate inputs.
  double x_scale() const { return x_range() > 0.0 ? x_range() : 1.0; }

  Eigen::VectorXd standardized_y() const {
    Eigen::VectorXd v(ys.size());
    for (int i = 0; i < n(); ++i) v[i] = (ys[i] - y_mean) / y_std;
    return v;
  }
};

inline Dataset make_dataset(std::vector<double> xs, std::vector<double> ys,
                            std::string name = {}, std::string x_unit = {},
                            std::string y_unit = {}) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("x and y column lengths differ");
  if (xs.size() < 2)
    throw std::invalid_argument("dataset needs at least two rows");
  for (size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument("dataset contains a non-finite value");

  std::vector<int> order(xs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return xs[a] < xs[b]; });

  Dataset d;
  d.name = std::move(name);
  d.x_unit = std::move(x_unit);
  d.y_unit = std::move(y_unit);
  d.xs.reserve(xs.size());
  d.ys.reserve(ys.size());
  for (int i : order) {
    d.xs.push_back(xs[i]);
    d.ys.push_back(ys[i]);
  }

  auto moments = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double t : v) mean += t;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double t : v) var += (t - mean) * (t - mean);
    var /= static_cast<double>(v.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  auto [ym, ys_] = moments(d.ys);
  auto [xm, xs_] = moments(d.xs);
  d.y_mean = ym;
  d.y_std = ys_ > 0.0 ? ys_ : 1.0;
  d.x_mean = xm;
  d.x_std = xs_ > 0.0 ? xs_ : 1.0;
  return d;
}

// ---- marginal likelihood ----

// log N(y | 0, K) on the standardized targets.
inline double log_marginal_likelihood(const KernelExpr& e, const Dataset& d) {
  FactoredGram g = gram_matrix(e, d.xs);
  Eigen::VectorXd y = d.standardized_y();
  Eigen::VectorXd alpha = g.llt.solve(y);
  double logdet = 2.0 * g.llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * d.n() * kLog2Pi;
}

struct LmlWithGradient {
  double value;
  Eigen::VectorXd grad;  // in packed parameter order
};

inline LmlWithGradient lml_with_gradient(const KernelExpr& e,
                                         const Dataset& d) {
  KernelGradients kg = kernel_gradients(e, d.xs);
  FactoredGram g = factor_with_jitter(kg.value);
  Eigen::VectorXd y = d.standardized_y();
  Eigen::VectorXd alpha = g.llt.solve(y);
  double logdet = 2.0 * g.llt.matrixLLT().diagonal().array().log().sum();

  LmlWithGradient out;
  out.value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * d.n() * kLog2Pi;
  const auto n = g.k.rows();
  Eigen::MatrixXd a =
      alpha * alpha.transpose() - g.llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.grad.resize(static_cast<Eigen::Index>(kg.grads.size()));
  for (size_t i = 0; i < kg.grads.size(); ++i)
    out.grad[static_cast<Eigen::Index>(i)] =
        0.5 * a.cwiseProduct(kg.grads[i]).sum();
  return out;
}

// ---- hyperparameter optimization ----

// Log-space parameters are boxed to |theta| <= 50: outside that range the
// Gram matrix is numerically constant in the parameter anyway, and rejecting
// the point keeps the line search from wandering to overflow.
inline constexpr double kLogParamBound = 50.0;

namespace detail {

inline bool within_bounds(const std::vector<ParamSlot>& slots,
                          const Eigen::VectorXd& x) {
  for (size_t i = 0; i < slots.size(); ++i) {
    double v = x[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(v)) return false;
    if (slots[i].transform == Transform::Log && std::abs(v) > kLogParamBound)
      return false;
  }
  return true;
}

// Smallest positive gap between consecutive (sorted) sample positions;
// 0 when there is none.
inline double min_spacing(const std::vector<double>& xs) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < xs.size(); ++i) {
    double d = xs[i] - xs[i - 1];
    if (d > 0.0 && d < best) best = d;
  }
  return std::isfinite(best) ? best : 0.0;
}

// Rejects hyperparameters the sampling grid cannot identify.  A kernel whose
// correlation varies on scales finer than the smallest gap between inputs
// leaves neighboring samples almost uncorrelated (< exp(-1/2) at one gap),
// which white noise already models; letting the optimizer enter that regime
// only buys likelihood by chasing the realized noise.  An SE therefore needs
// a lengthscale of at least the minimum spacing, and a periodic kernel
// (local wiggle scale p*l/(2*pi)) needs p*l >= 2*pi*spacing.
inline bool identifiable_scales(const KernelExpr& e, double min_dx) {
  if (min_dx <= 0.0) return true;
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          switch (n.kind) {
            case BaseKind::SE:
              return n.params.lengthscale >= min_dx;
            case BaseKind::PER:
              return n.params.period * n.params.lengthscale >=
                     2.0 * M_PI * min_dx;
            default:
              return true;
          }
        } else {
          for (const auto& c : n.children)
            if (!identifiable_scales(c, min_dx)) return false;
          return true;
        }
      },
      e.node);
}

// Draw one packed starting point; scales come from the data.  The target
// variance is that of the standardized y, i.e. 1 except for degenerate data.
inline Eigen::VectorXd random_start(const std::vector<ParamSlot>& slots,
                                    const Dataset& d, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  double range = d.x_scale();
  Eigen::VectorXd x(static_cast<Eigen::Index>(slots.size()));
  for (size_t i = 0; i < slots.size(); ++i) {
    double v = 0.0;
    switch (slots[i].field) {
      case ParamField::Variance: {
        double u = std::uniform_int_distribution<int>(0, 1)(rng) ? 1.0 : 0.1;
        v = std::log(1.0) * u + unit(rng);  // var of standardized y is 1
        break;
      }
      case ParamField::Lengthscale:
        v = std::log(range / 10.0) + unit(rng);
        break;
      case ParamField::Period: {
        int k = std::uniform_int_distribution<int>(2, 25)(rng);
        v = std::log(range / static_cast<double>(k)) + 0.5 * unit(rng);
        break;
      }
      case ParamField::Offset:
        v = d.x_mean + d.x_std * unit(rng);
        break;
      case ParamField::Location:
        v = std::uniform_real_distribution<double>(d.x_min(), d.x_max())(rng);
        break;
      case ParamField::Steepness:
        v = std::log(range / 20.0) + 0.5 * unit(rng);
        break;
    }
    x[static_cast<Eigen::Index>(i)] = v;
  }
  return x;
}

}  // namespace detail

struct FitResult {
  KernelExpr kernel;
  double log_ml;
  int restarts_used;  // optimizer runs that produced a finite objective
};

// Maximizes the marginal likelihood over the kernel's parameters.  The
// incoming parameter values are one starting point; `restarts` further random
// starts are drawn deterministically from (seed, stream, restart index).
// Returns nullopt when every start fails to evaluate.
inline std::optional<FitResult> optimize_params(const KernelExpr& kernel,
                                                const Dataset& data,
                                                int restarts,
                                                std::uint64_t seed,
                                                std::uint64_t stream = 0) {
  KernelExpr scratch = kernel;
  std::vector<ParamSlot> slots;
  collect_param_slots(scratch, slots);
  const double min_dx = detail::min_spacing(data.xs);

  auto objective = [&](const Eigen::VectorXd& x,
                       Eigen::VectorXd* grad) -> double {
    if (!detail::within_bounds(slots, x))
      return std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < slots.size(); ++i) {
      double v = x[static_cast<Eigen::Index>(i)];
      *slots[i].value = slots[i].transform == Transform::Log ? std::exp(v) : v;
    }
    if (!detail::identifiable_scales(scratch, min_dx))
      return std::numeric_limits<double>::infinity();
    try {
      if (grad) {
        LmlWithGradient r = lml_with_gradient(scratch, data);
        *grad = -r.grad;
        return -r.value;
      }
      return -log_marginal_likelihood(scratch, data);
    } catch (const factorization_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<double> packed = pack_params(kernel);
  Eigen::VectorXd incoming =
      Eigen::Map<const Eigen::VectorXd>(packed.data(), packed.size());

  // Survey/polish schedule: every start gets a short, slightly loose run,
  // then only the best surviving point is polished to full tolerance.  The
  // line search is monotone, so the polished value can only improve on the
  // survey winner, and a warm start can never end below its incoming value.
  constexpr int kSurveyIters = 30;
  constexpr double kSurveyRelTol = 1e-5;
  constexpr int kPolishIters = 170;

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  int succeeded = 0;
  for (int s = 0; s <= restarts; ++s) {
    Eigen::VectorXd x0;
    if (s == 0) {
      x0 = incoming;
    } else {
      auto rng = make_rng(seed, stream, static_cast<std::uint64_t>(s));
      x0 = detail::random_start(slots, data, rng);
    }
    OptimResult r =
        minimize_cg(objective, std::move(x0), kSurveyIters, kSurveyRelTol);
    if (!r.ok) continue;
    ++succeeded;
    if (r.value < best) {
      best = r.value;
      best_x = r.x;
    }
  }
  if (succeeded == 0) return std::nullopt;

  OptimResult polish = minimize_cg(objective, Eigen::VectorXd(best_x),
                                   kPolishIters);
  if (polish.ok && polish.value < best) {
    best = polish.value;
    best_x = std::move(polish.x);
  }

  FitResult out{kernel, -best, succeeded};
  for (size_t i = 0; i < slots.size(); ++i) {
    double v = best_x[static_cast<Eigen::Index>(i)];
    *slots[i].value = slots[i].transform == Transform::Log ? std::exp(v) : v;
  }
  out.kernel = scratch;
  return out;
}

// ---- scoring ----

inline double bic(double log_ml, int num_params, int n) {
  return -2.0 * log_ml + static_cast<double>(num_params) *
                             std::log(static_cast<double>(n));
}

struct ScoredModel {
  KernelExpr kernel;
  double log_ml = -std::numeric_limits<double>::infinity();
  double bic_value = std::numeric_limits<double>::infinity();
  int param_count = 0;
  int restarts_used = 0;
};

inline std::optional<ScoredModel> score_model(const KernelExpr& kernel,
                                              const Dataset& data,
                                              int restarts, std::uint64_t seed,
                                              std::uint64_t stream = 0) {
  auto fit = optimize_params(kernel, data, restarts, seed, stream);
  if (!fit) return std::nullopt;
  ScoredModel m;
  m.kernel = std::move(fit->kernel);
  m.log_ml = fit->log_ml;
  m.param_count = count_params(m.kernel);
  m.bic_value = bic(m.log_ml, m.param_count, data.n());
  m.restarts_used = fit->restarts_used;
  return m;
}

// ---- posterior prediction ----

struct Posterior {
  std::vector<double> mean;      // original units
  std::vector<double> variance;  // original units squared
};

namespace detail {

// Clamp tiny numerically negative variances to zero; anything materially
// negative indicates a broken covariance and is reported loudly.
inline double checked_variance(double v) {
  if (v >= 0.0) return v;
  if (v >= -1e-10) return 0.0;
  throw std::runtime_error("negative predictive variance: " +
                           std::to_string(v));
}

}  // namespace detail

inline Posterior predict(const KernelExpr& e, const Dataset& d,
                         const std::vector<double>& query) {
  FactoredGram g = gram_matrix(e, d.xs);
  Eigen::VectorXd y = d.standardized_y();
  Eigen::VectorXd alpha = g.llt.solve(y);
  Eigen::MatrixXd ks = kernel_matrix(e, query, d.xs);  // m x n
  Eigen::VectorXd mean_std = ks * alpha;
  Eigen::MatrixXd kinv_ks = g.llt.solve(ks.transpose());  // n x m

  Posterior p;
  p.mean.resize(query.size());
  p.variance.resize(query.size());
  for (size_t j = 0; j < query.size(); ++j) {
    auto idx = static_cast<Eigen::Index>(j);
    double kss = eval_kernel(e, query[j], query[j]);
    double var_std =
        detail::checked_variance(kss - ks.row(idx).dot(kinv_ks.col(idx)));
    p.mean[j] = d.y_mean + d.y_std * mean_std[idx];
    p.variance[j] = d.y_std * d.y_std * var_std;
  }
  return p;
}

// ---- additive decomposition ----

// One additive component of the posterior.  Means are in original y units
// but expressed as deviations from the dataset mean: the components sum to
// the full posterior mean minus y_mean, since the centering offset belongs
// to no single component.
struct PosteriorComponent {
  ProductTerm term;
  std::vector<double> mean;
  std::vector<double> variance;
  bool is_noise = false;
};

inline std::vector<PosteriorComponent> decompose_posterior(
    const KernelExpr& e, const Dataset& d, const std::vector<double>& query) {
  NormalForm nf = to_normal_form(e);
  FactoredGram g = gram_matrix(e, d.xs);
  Eigen::VectorXd y = d.standardized_y();
  Eigen::VectorXd alpha = g.llt.solve(y);

  std::vector<PosteriorComponent> out;
  out.reserve(nf.terms.size());
  for (const ProductTerm& t : nf.terms) {
    Eigen::MatrixXd kc = term_matrix(t, query, d.xs);  // m x n
    Eigen::VectorXd mean_std = kc * alpha;
    Eigen::MatrixXd kinv_kc = g.llt.solve(kc.transpose());

    PosteriorComponent c;
    c.term = t;
    c.is_noise = t.is_noise();
    c.mean.resize(query.size());
    c.variance.resize(query.size());
    for (size_t j = 0; j < query.size(); ++j) {
      auto idx = static_cast<Eigen::Index>(j);
      double kss = eval_term(t, query[j], query[j]);
      double var_std =
          detail::checked_variance(kss - kc.row(idx).dot(kinv_kc.col(idx)));
      c.mean[j] = d.y_std * mean_std[idx];
      c.variance[j] = d.y_std * d.y_std * var_std;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace autostat
