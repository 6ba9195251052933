// Reference implementations used only by the test suite.  Everything here is
// deliberately written from first principles (naive dense LU, power-series
// Bessel, direct formula transliterations) and shares no code with the library
// under test, so agreement between the two routes is meaningful evidence.
#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "autostat/kernel.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat make_mat(std::size_t n, std::size_t m, double fill = 0.0) {
  return Mat(n, Vec(m, fill));
}

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting (Doolittle).  No external linear algebra.
// ---------------------------------------------------------------------------

struct Lu {
  Mat a;                 // packed L (unit diagonal) and U
  std::vector<int> piv;  // row permutation
  double sign = 1.0;
};

inline Lu lu_decompose(Mat a) {
  const std::size_t n = a.size();
  Lu out;
  out.piv.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.piv[i] = static_cast<int>(i);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a[col][col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(a[r][col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw std::runtime_error("oracle LU: singular matrix");
    if (pivot != col) {
      std::swap(a[pivot], a[col]);
      std::swap(out.piv[pivot], out.piv[col]);
      out.sign = -out.sign;
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      a[r][col] /= a[col][col];
      const double f = a[r][col];
      for (std::size_t c = col + 1; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  out.a = std::move(a);
  return out;
}

inline Vec lu_solve(const Lu& lu, const Vec& b) {
  const std::size_t n = lu.a.size();
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(lu.piv[i])];
  for (std::size_t i = 0; i < n; ++i)  // forward: L has unit diagonal
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu.a[i][j] * x[j];
  for (std::size_t ii = n; ii-- > 0;) {  // backward
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu.a[ii][j] * x[j];
    x[ii] /= lu.a[ii][ii];
  }
  return x;
}

// log|det| assuming a positive-definite input (any negative pivot pair still
// yields the right magnitude; the sign is tracked separately).
inline double lu_logdet(const Lu& lu) {
  double s = 0.0;
  for (std::size_t i = 0; i < lu.a.size(); ++i) s += std::log(std::fabs(lu.a[i][i]));
  return s;
}

inline double lu_det_sign(const Lu& lu) {
  double s = lu.sign;
  for (std::size_t i = 0; i < lu.a.size(); ++i)
    if (lu.a[i][i] < 0.0) s = -s;
  return s;
}

inline Mat lu_inverse(const Lu& lu) {
  const std::size_t n = lu.a.size();
  Mat inv = make_mat(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec e(n, 0.0);
    e[c] = 1.0;
    const Vec col = lu_solve(lu, e);
    for (std::size_t r = 0; r < n; ++r) inv[r][c] = col[r];
  }
  return inv;
}

// Gaussian log-density log N(y | 0, K) computed with the oracle LU.
inline double log_mvn_density(const Mat& k, const Vec& y) {
  const std::size_t n = y.size();
  const Lu lu = lu_decompose(k);
  if (lu_det_sign(lu) <= 0.0) throw std::runtime_error("oracle: covariance not PD");
  const Vec alpha = lu_solve(lu, y);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) quad += y[i] * alpha[i];
  constexpr double log_two_pi = 1.8378770664093454835606594728112;
  return -0.5 * quad - 0.5 * lu_logdet(lu) - 0.5 * static_cast<double>(n) * log_two_pi;
}

// ---------------------------------------------------------------------------
// Reference special functions and kernel formulas.
// ---------------------------------------------------------------------------

// Plain (unscaled) modified Bessel I0 by power series.  Adequate for z up to
// ~30, which covers every parameter range the tests draw.
inline double ref_bessel_i0(double z) {
  const double q = 0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

constexpr double ref_two_pi = 6.2831853071795864769252867665590;

inline double ref_white(double variance, double x, double xp) {
  return x == xp ? variance : 0.0;
}

inline double ref_constant(double variance) { return variance; }

inline double ref_linear(double variance, double offset, double x, double xp) {
  return variance * (x - offset) * (xp - offset);
}

inline double ref_se(double variance, double lengthscale, double x, double xp) {
  const double d = x - xp;
  return variance * std::exp(-d * d / (2.0 * lengthscale * lengthscale));
}

// Unscaled textbook form of the normalized periodic kernel; independently
// cancels against the scaled-Bessel route in the library.
inline double ref_periodic(double variance, double lengthscale, double period,
                           double x, double xp) {
  const double u = 1.0 / (lengthscale * lengthscale);
  const double c = std::cos(ref_two_pi * (x - xp) / period);
  const double i0 = ref_bessel_i0(u);
  return variance * (std::exp(u * c) - i0) / (std::exp(u) - i0);
}

inline double ref_cosine(double variance, double period, double x, double xp) {
  return variance * std::cos(ref_two_pi * (x - xp) / period);
}

inline double ref_sigmoid(double location, double steepness, double x) {
  return 0.5 * (1.0 + std::tanh((location - x) / steepness));
}

inline double ref_base(const autostat::BaseNode& b, double x, double xp) {
  using autostat::BaseKind;
  switch (b.kind) {
    case BaseKind::WN: return ref_white(b.params.variance, x, xp);
    case BaseKind::C: return ref_constant(b.params.variance);
    case BaseKind::SE:
      return ref_se(b.params.variance, b.params.lengthscale, x, xp);
    case BaseKind::PER:
      return ref_periodic(b.params.variance, b.params.lengthscale,
                          b.params.period, x, xp);
    case BaseKind::COS:
      return ref_cosine(b.params.variance, b.params.period, x, xp);
    case BaseKind::LIN:
      return ref_linear(b.params.variance, b.params.offset, x, xp);
  }
  throw std::logic_error("oracle: bad base kind");
}

// Direct recursive evaluation of a kernel expression from the raw formulas.
inline double ref_eval(const autostat::KernelExpr& e, double x, double xp) {
  using namespace autostat;
  if (e.is_base()) return ref_base(e.as_base(), x, xp);
  if (e.is_sum()) {
    double s = 0.0;
    for (const auto& c : std::get<SumNode>(e.node).children)
      s += ref_eval(c, x, xp);
    return s;
  }
  if (e.is_product()) {
    double p = 1.0;
    for (const auto& c : std::get<ProductNode>(e.node).children)
      p *= ref_eval(c, x, xp);
    return p;
  }
  if (e.is_changepoint()) {
    const auto& n = std::get<ChangepointNode>(e.node);
    const double s1 = ref_sigmoid(n.sig.location, n.sig.steepness, x);
    const double s2 = ref_sigmoid(n.sig.location, n.sig.steepness, xp);
    return s1 * ref_eval(n.children[0], x, xp) * s2 +
           (1.0 - s1) * ref_eval(n.children[1], x, xp) * (1.0 - s2);
  }
  const auto& n = std::get<autostat::ChangewindowNode>(e.node);
  const double lo = std::min(n.window.location1, n.window.location2);
  const double hi = std::max(n.window.location1, n.window.location2);
  const double st = n.window.steepness;
  const double m1 = (1.0 - ref_sigmoid(lo, st, x)) * ref_sigmoid(hi, st, x);
  const double m2 = (1.0 - ref_sigmoid(lo, st, xp)) * ref_sigmoid(hi, st, xp);
  return m1 * ref_eval(n.children[0], x, xp) * m2 +
         (1.0 - m1) * ref_eval(n.children[1], x, xp) * (1.0 - m2);
}

// ---------------------------------------------------------------------------
// Random expression generator for property tests.
// ---------------------------------------------------------------------------

// Parameter magnitudes are chosen so every reference formula stays well
// conditioned (periodic u = 1/l^2 stays within the power-series Bessel range
// and far above the library's small-u cosine branch).
struct RandomExprConfig {
  double x_lo = -2.0;
  double x_hi = 2.0;
  bool allow_changepoints = true;
};

inline autostat::KernelExpr random_base(std::mt19937_64& rng,
                                        const RandomExprConfig& cfg) {
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_real_distribution<double> log_var(-1.0, 1.0);
  std::uniform_real_distribution<double> log_len(-1.0, 1.2);
  std::uniform_real_distribution<double> log_per(-0.7, 1.0);
  std::uniform_real_distribution<double> offset(cfg.x_lo, cfg.x_hi);
  const double v = std::exp(log_var(rng));
  switch (kind(rng)) {
    case 0: return autostat::wn(v);
    case 1: return autostat::constant(v);
    case 2: return autostat::se(v, std::exp(log_len(rng)));
    case 3:
      return autostat::per(v, std::exp(log_len(rng)), std::exp(log_per(rng)));
    case 4: return autostat::cosine(v, std::exp(log_per(rng)));
    default: return autostat::lin(v, offset(rng));
  }
}

inline autostat::KernelExpr random_expr(std::mt19937_64& rng, int depth,
                                        const RandomExprConfig& cfg = {}) {
  if (depth <= 0) return random_base(rng, cfg);
  std::uniform_int_distribution<int> node(0, cfg.allow_changepoints ? 4 : 2);
  std::uniform_int_distribution<int> arity(2, 3);
  std::uniform_real_distribution<double> loc(cfg.x_lo, cfg.x_hi);
  std::uniform_real_distribution<double> log_steep(-1.5, 0.5);
  const int choice = node(rng);
  switch (choice) {
    case 0: return random_base(rng, cfg);
    case 1:
    case 2: {
      std::vector<autostat::KernelExpr> kids;
      const int k = arity(rng);
      for (int i = 0; i < k; ++i) kids.push_back(random_expr(rng, depth - 1, cfg));
      return choice == 1 ? autostat::sum(std::move(kids))
                         : autostat::product(std::move(kids));
    }
    case 3: {
      autostat::SigmoidParams sig;
      sig.location = loc(rng);
      sig.steepness = std::exp(log_steep(rng));
      return autostat::changepoint(random_expr(rng, depth - 1, cfg),
                                   random_expr(rng, depth - 1, cfg), sig);
    }
    default: {
      double a = loc(rng);
      double b = loc(rng);
      if (b < a) std::swap(a, b);
      if (b - a < 0.1) b = a + 0.1;
      autostat::WindowParams win;
      win.location1 = a;
      win.location2 = b;
      win.steepness = std::exp(log_steep(rng));
      return autostat::changewindow(random_expr(rng, depth - 1, cfg),
                                    random_expr(rng, depth - 1, cfg), win);
    }
  }
}

// ---------------------------------------------------------------------------
// Tolerance helpers.
// ---------------------------------------------------------------------------

inline bool close_rel(double a, double b, double rel, double floor = 1.0) {
  const double scale = std::max({floor, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= rel * scale;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
