#pragma once

// Unconstrained smooth minimization: Polak-Ribiere nonlinear conjugate
// gradients with an Armijo backtracking line search.  The objective callback
// has signature double(const VectorXd& x, VectorXd* grad); it fills *grad only
// when grad is non-null (value-only probes are much cheaper for our
// objectives) and signals an infeasible point by returning a non-finite
// value, which the line search treats as a rejection.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace autostat {

struct OptimResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool ok = false;         // initial point evaluated to a finite value
  bool converged = false;  // stopped on tolerance rather than iteration cap
};

template <typename F>
OptimResult minimize_cg(F&& fg, Eigen::VectorXd x0, int max_iters = 200,
                        double rel_tol = 1e-6) {
  using Eigen::VectorXd;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 50;
  // Convergence requires several consecutive sub-tolerance improvements; a
  // single slow iteration is common mid-run on ill-conditioned objectives.
  constexpr int kStallLimit = 3;

  OptimResult res;
  res.x = std::move(x0);

  VectorXd grad(res.x.size());
  res.value = fg(res.x, &grad);
  ++res.evaluations;
  if (!std::isfinite(res.value)) return res;
  res.ok = true;

  VectorXd dir = -grad;
  double gg = grad.squaredNorm();
  double step = 1.0 / (1.0 + std::sqrt(gg));
  int stall = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (std::sqrt(gg) < 1e-10 * (1.0 + std::abs(res.value))) {
      res.converged = true;
      break;
    }
    double gd = grad.dot(dir);
    if (gd >= 0.0) {  // not a descent direction; restart with steepest descent
      dir = -grad;
      gd = -gg;
    }

    // Armijo search: trial steps shrink by quadratic interpolation of the
    // one-dimensional model (clamped to [0.1 t, 0.5 t]), with one
    // steepest-descent retry if the conjugate direction fails outright.
    bool accepted = false;
    VectorXd xt;
    double ft = 0.0;
    double t = step;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      t = step;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        xt = res.x + t * dir;
        ft = fg(xt, nullptr);
        ++res.evaluations;
        if (std::isfinite(ft) && ft <= res.value + kArmijo * t * gd) {
          accepted = true;
          break;
        }
        double tq = t * 0.5;
        if (std::isfinite(ft)) {
          double denom = 2.0 * (ft - res.value - gd * t);
          if (denom > 0.0)
            tq = std::clamp(-gd * t * t / denom, 0.1 * t, 0.5 * t);
        }
        t = tq;
      }
      if (!accepted && attempt == 0) {
        if (dir == -grad) break;  // already steepest descent; give up
        dir = -grad;
        gd = -gg;
      }
    }
    if (!accepted) break;

    // Forward extension: CG needs near-exact line minimization to build
    // conjugacy, so keep doubling while the value still drops.  Probes are
    // value-only and therefore cheap.
    for (int ext = 0; ext < 20; ++ext) {
      VectorXd xe = res.x + 2.0 * t * dir;
      double fe = fg(xe, nullptr);
      ++res.evaluations;
      if (!(std::isfinite(fe) && fe < ft)) break;
      t *= 2.0;
      xt = std::move(xe);
      ft = fe;
    }

    double prev = res.value;
    VectorXd gnew(res.x.size());
    double fnew = fg(xt, &gnew);
    ++res.evaluations;
    if (!std::isfinite(fnew)) break;  // keep the last good point
    res.x = std::move(xt);
    res.value = fnew;
    ++res.iterations;

    double beta = gnew.dot(gnew - grad) / gg;  // Polak-Ribiere, clipped at 0
    if (!(beta > 0.0)) beta = 0.0;
    dir = beta * dir - gnew;
    grad = std::move(gnew);
    gg = grad.squaredNorm();
    step = 2.0 * t;

    if (prev - res.value < rel_tol * (1.0 + std::abs(prev))) {
      if (++stall >= kStallLimit) {
        res.converged = true;
        break;
      }
    } else {
      stall = 0;
    }
  }
  return res;
}

}  // namespace autostat
