#pragma once

// Numeric evaluation of kernels: scalar entries, Gram and cross-covariance
// matrices, Cholesky factorization with adaptive jitter, and analytic
// parameter gradients in the packed (log/identity) parameter space.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "autostat/bessel.hpp"
#include "autostat/kernel.hpp"
#include "autostat/normal_form.hpp"

namespace autostat {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct factorization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Below this value of 1/l^2 the periodic kernel's normalization denominator
// 1 - I0e(1/l^2) loses all precision; evaluate the analytic cosine limit
// instead.
inline constexpr double kPeriodicCosineThreshold = 1e-6;

// Decreasing sigmoid: 1 well before the location, 0 well after, 0.5 at it.
inline double sigmoid_value(double x, const SigmoidParams& p) {
  return 0.5 * (1.0 + std::tanh((p.location - x) / p.steepness));
}

// Product-of-sigmoids mask: ~1 inside (location1, location2), ~0 outside.
// Locations are used in sorted order so the mask stays well defined when an
// optimizer step crosses them.
inline double window_mask(double x, const WindowParams& p) {
  double lo = std::min(p.location1, p.location2);
  double hi = std::max(p.location1, p.location2);
  SigmoidParams slo{lo, p.steepness}, shi{hi, p.steepness};
  return (1.0 - sigmoid_value(x, slo)) * sigmoid_value(x, shi);
}

inline double eval_base(BaseKind kind, const BaseParams& p, double x,
                        double xp) {
  switch (kind) {
    case BaseKind::WN: return x == xp ? p.variance : 0.0;
    case BaseKind::C: return p.variance;
    case BaseKind::LIN:
      return p.variance * (x - p.offset) * (xp - p.offset);
    case BaseKind::SE: {
      double d = x - xp;
      double l = p.lengthscale;
      return p.variance * std::exp(-d * d / (2.0 * l * l));
    }
    case BaseKind::PER: {
      double u = 1.0 / (p.lengthscale * p.lengthscale);
      double delta = 2.0 * M_PI * (x - xp) / p.period;
      if (u < kPeriodicCosineThreshold) return p.variance * std::cos(delta);
      double i0e = bessel_i0e(u);
      double num = std::exp(u * (std::cos(delta) - 1.0)) - i0e;
      double den = 1.0 - i0e;
      return p.variance * num / den;
    }
    case BaseKind::COS:
      return p.variance * std::cos(2.0 * M_PI * (x - xp) / p.period);
  }
  return 0.0;
}

inline double eval_kernel(const KernelExpr& e, double x, double xp) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          return eval_base(n.kind, n.params, x, xp);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          double v = 0.0;
          for (const auto& c : n.children) v += eval_kernel(c, x, xp);
          return v;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          double v = 1.0;
          for (const auto& c : n.children) v *= eval_kernel(c, x, xp);
          return v;
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          double sx = sigmoid_value(x, n.sig);
          double sxp = sigmoid_value(xp, n.sig);
          return sx * eval_kernel(n.children[0], x, xp) * sxp +
                 (1.0 - sx) * eval_kernel(n.children[1], x, xp) * (1.0 - sxp);
        } else {
          double mx = window_mask(x, n.window);
          double mxp = window_mask(xp, n.window);
          return mx * eval_kernel(n.children[0], x, xp) * mxp +
                 (1.0 - mx) * eval_kernel(n.children[1], x, xp) * (1.0 - mxp);
        }
      },
      e.node);
}

inline double eval_sigmoid_factor(const SigmoidFactor& s, double x,
                                  double xp) {
  switch (s.kind) {
    case SigmoidKind::Until: {
      SigmoidParams p{s.location, s.steepness};
      return sigmoid_value(x, p) * sigmoid_value(xp, p);
    }
    case SigmoidKind::From: {
      SigmoidParams p{s.location, s.steepness};
      return (1.0 - sigmoid_value(x, p)) * (1.0 - sigmoid_value(xp, p));
    }
    case SigmoidKind::InWindow: {
      WindowParams p{s.location, s.location2, s.steepness};
      return window_mask(x, p) * window_mask(xp, p);
    }
    case SigmoidKind::OutWindow: {
      WindowParams p{s.location, s.location2, s.steepness};
      return (1.0 - window_mask(x, p)) * (1.0 - window_mask(xp, p));
    }
  }
  return 0.0;
}

inline double eval_term(const ProductTerm& t, double x, double xp) {
  double v = 1.0;
  for (const auto& f : term_factors(t)) {
    if (std::holds_alternative<BaseNode>(f)) {
      const auto& b = std::get<BaseNode>(f);
      v *= eval_base(b.kind, b.params, x, xp);
    } else {
      v *= eval_sigmoid_factor(std::get<SigmoidFactor>(f), x, xp);
    }
  }
  return v;
}

namespace detail {

// Pairwise differences and the input vectors for one (rows, cols) grid.
struct PairGrid {
  VectorXd a;
  VectorXd b;
  MatrixXd diff;  // diff(i,j) = a[i] - b[j]

  PairGrid(const std::vector<double>& rows, const std::vector<double>& cols) {
    a = Eigen::Map<const VectorXd>(rows.data(), rows.size());
    b = Eigen::Map<const VectorXd>(cols.data(), cols.size());
    diff = a.replicate(1, b.size()) - b.transpose().replicate(a.size(), 1);
  }
};

inline MatrixXd base_matrix(BaseKind kind, const BaseParams& p,
                            const PairGrid& g) {
  const auto n = g.a.size(), m = g.b.size();
  switch (kind) {
    case BaseKind::WN: {
      MatrixXd k(n, m);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          k(i, j) = g.a[i] == g.b[j] ? p.variance : 0.0;
      return k;
    }
    case BaseKind::C: return MatrixXd::Constant(n, m, p.variance);
    case BaseKind::LIN:
      return p.variance * (g.a.array() - p.offset).matrix() *
             (g.b.array() - p.offset).matrix().transpose();
    case BaseKind::SE: {
      double inv2l2 = 1.0 / (2.0 * p.lengthscale * p.lengthscale);
      return p.variance *
             (-g.diff.array().square() * inv2l2).exp().matrix();
    }
    case BaseKind::PER: {
      double u = 1.0 / (p.lengthscale * p.lengthscale);
      Eigen::ArrayXXd delta = 2.0 * M_PI / p.period * g.diff.array();
      if (u < kPeriodicCosineThreshold)
        return p.variance * delta.cos().matrix();
      double i0e = bessel_i0e(u);
      double den = 1.0 - i0e;
      return (p.variance / den) *
             ((u * (delta.cos() - 1.0)).exp() - i0e).matrix();
    }
    case BaseKind::COS:
      return p.variance *
             (2.0 * M_PI / p.period * g.diff.array()).cos().matrix();
  }
  return MatrixXd::Zero(n, m);
}

inline VectorXd sigmoid_vector(const VectorXd& xs, double location,
                               double steepness) {
  return (0.5 * (1.0 + ((location - xs.array()) / steepness).tanh())).matrix();
}

inline VectorXd window_vector(const VectorXd& xs, const WindowParams& p) {
  double lo = std::min(p.location1, p.location2);
  double hi = std::max(p.location1, p.location2);
  return ((1.0 - sigmoid_vector(xs, lo, p.steepness).array()) *
          sigmoid_vector(xs, hi, p.steepness).array())
      .matrix();
}

inline MatrixXd node_matrix(const KernelExpr& e, const PairGrid& g) {
  return std::visit(
      [&](const auto& n) -> MatrixXd {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          return base_matrix(n.kind, n.params, g);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          MatrixXd k = node_matrix(n.children[0], g);
          for (size_t i = 1; i < n.children.size(); ++i)
            k += node_matrix(n.children[i], g);
          return k;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          MatrixXd k = node_matrix(n.children[0], g);
          for (size_t i = 1; i < n.children.size(); ++i)
            k = k.cwiseProduct(node_matrix(n.children[i], g));
          return k;
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          VectorXd sa = sigmoid_vector(g.a, n.sig.location, n.sig.steepness);
          VectorXd sb = sigmoid_vector(g.b, n.sig.location, n.sig.steepness);
          MatrixXd k1 = node_matrix(n.children[0], g);
          MatrixXd k2 = node_matrix(n.children[1], g);
          return (sa * sb.transpose()).cwiseProduct(k1) +
                 ((VectorXd::Ones(sa.size()) - sa) *
                  (VectorXd::Ones(sb.size()) - sb).transpose())
                     .cwiseProduct(k2);
        } else {
          VectorXd ma = window_vector(g.a, n.window);
          VectorXd mb = window_vector(g.b, n.window);
          MatrixXd k1 = node_matrix(n.children[0], g);
          MatrixXd k2 = node_matrix(n.children[1], g);
          return (ma * mb.transpose()).cwiseProduct(k1) +
                 ((VectorXd::Ones(ma.size()) - ma) *
                  (VectorXd::Ones(mb.size()) - mb).transpose())
                     .cwiseProduct(k2);
        }
      },
      e.node);
}

}  // namespace detail

// Cross-covariance matrix between two input sets.
inline MatrixXd kernel_matrix(const KernelExpr& e,
                              const std::vector<double>& rows,
                              const std::vector<double>& cols) {
  detail::PairGrid g(rows, cols);
  return detail::node_matrix(e, g);
}

inline MatrixXd term_matrix(const ProductTerm& t,
                            const std::vector<double>& rows,
                            const std::vector<double>& cols) {
  detail::PairGrid g(rows, cols);
  MatrixXd k = MatrixXd::Ones(g.a.size(), g.b.size());
  for (const auto& f : term_factors(t)) {
    if (std::holds_alternative<BaseNode>(f)) {
      const auto& b = std::get<BaseNode>(f);
      k = k.cwiseProduct(detail::base_matrix(b.kind, b.params, g));
    } else {
      const auto& s = std::get<SigmoidFactor>(f);
      VectorXd va, vb;
      switch (s.kind) {
        case SigmoidKind::Until:
          va = detail::sigmoid_vector(g.a, s.location, s.steepness);
          vb = detail::sigmoid_vector(g.b, s.location, s.steepness);
          break;
        case SigmoidKind::From:
          va = VectorXd::Ones(g.a.size()) -
               detail::sigmoid_vector(g.a, s.location, s.steepness);
          vb = VectorXd::Ones(g.b.size()) -
               detail::sigmoid_vector(g.b, s.location, s.steepness);
          break;
        case SigmoidKind::InWindow: {
          WindowParams w{s.location, s.location2, s.steepness};
          va = detail::window_vector(g.a, w);
          vb = detail::window_vector(g.b, w);
          break;
        }
        case SigmoidKind::OutWindow: {
          WindowParams w{s.location, s.location2, s.steepness};
          va = VectorXd::Ones(g.a.size()) - detail::window_vector(g.a, w);
          vb = VectorXd::Ones(g.b.size()) - detail::window_vector(g.b, w);
          break;
        }
      }
      k = k.cwiseProduct(MatrixXd(va * vb.transpose()));
    }
  }
  return k;
}

struct FactoredGram {
  MatrixXd k;       // with jitter already on the diagonal
  double jitter;    // amount added
  Eigen::LLT<MatrixXd> llt;
};

// Factorizes a covariance matrix, escalating diagonal jitter from 1e-9 to
// 1e-3 times the mean diagonal until the Cholesky succeeds.
inline FactoredGram factor_with_jitter(const MatrixXd& k) {
  if (!k.allFinite())
    throw factorization_error("kernel matrix has non-finite entries");
  const auto n = k.rows();
  double mean_diag = k.trace() / static_cast<double>(n);
  if (!(mean_diag > 0)) mean_diag = 1.0;
  for (double level = 1e-9; level <= 1.000001e-3; level *= 10.0) {
    double jitter = level * mean_diag;
    FactoredGram g;
    g.k = k + jitter * MatrixXd::Identity(n, n);
    g.jitter = jitter;
    g.llt.compute(g.k);
    if (g.llt.info() == Eigen::Success) return g;
  }
  throw factorization_error("Cholesky failed after maximum jitter");
}

inline FactoredGram gram_matrix(const KernelExpr& e,
                                const std::vector<double>& xs) {
  return factor_with_jitter(kernel_matrix(e, xs, xs));
}

struct KernelGradients {
  MatrixXd value;
  std::vector<MatrixXd> grads;  // one per packed parameter, in pack order
};

namespace detail {

inline void base_matrix_grads(const BaseNode& n, const PairGrid& g,
                              KernelGradients& out) {
  MatrixXd k = base_matrix(n.kind, n.params, g);
  out.grads.push_back(k);  // d/dlog variance is the matrix itself
  switch (n.kind) {
    case BaseKind::SE: {
      double inv_l2 = 1.0 / (n.params.lengthscale * n.params.lengthscale);
      out.grads.push_back(
          k.cwiseProduct((g.diff.array().square() * inv_l2).matrix()));
      break;
    }
    case BaseKind::LIN: {
      double v = n.params.variance;
      VectorXd da = g.a.array() - n.params.offset;
      VectorXd db = g.b.array() - n.params.offset;
      MatrixXd d = -v * (da.replicate(1, g.b.size()) +
                         db.transpose().replicate(g.a.size(), 1));
      out.grads.push_back(std::move(d));
      break;
    }
    case BaseKind::PER: {
      double u = 1.0 / (n.params.lengthscale * n.params.lengthscale);
      Eigen::ArrayXXd delta = 2.0 * M_PI / n.params.period * g.diff.array();
      if (u < kPeriodicCosineThreshold) {
        // Cosine limit: no lengthscale dependence left.
        out.grads.push_back(MatrixXd::Zero(g.a.size(), g.b.size()));
        out.grads.push_back(n.params.variance *
                            (delta.sin() * delta).matrix());
        break;
      }
      double i0e = bessel_i0e(u);
      double i1e = bessel_i1e(u);
      double den = 1.0 - i0e;
      double di0e = i1e - i0e;  // d(I0e)/du
      Eigen::ArrayXXd expArg = (u * (delta.cos() - 1.0)).exp();
      // d/du of sigma^2 (E - I0e)/(1 - I0e), then chain through u = 1/l^2,
      // du/dlog l = -2u.
      Eigen::ArrayXXd dnum = expArg * (delta.cos() - 1.0) - di0e;
      Eigen::ArrayXXd num = expArg - i0e;
      Eigen::ArrayXXd dk_du =
          n.params.variance * (dnum * den + num * di0e) / (den * den);
      out.grads.push_back((-2.0 * u * dk_du).matrix());
      out.grads.push_back(
          (n.params.variance * u / den * delta.sin() * delta * expArg)
              .matrix());
      break;
    }
    case BaseKind::COS: {
      Eigen::ArrayXXd delta = 2.0 * M_PI / n.params.period * g.diff.array();
      out.grads.push_back(n.params.variance * (delta.sin() * delta).matrix());
      break;
    }
    default: break;
  }
  out.value = std::move(k);
}

inline KernelGradients node_matrix_grads(const KernelExpr& e,
                                         const PairGrid& g);

// Shared by CP and CW: K = va vb' .* K1 + (1-va)(1-vb)' .* K2 with the mask
// vectors' own derivatives in dva/dvb (one entry per mask parameter).
inline KernelGradients blend_grads(const KernelExpr& left,
                                   const KernelExpr& right, const PairGrid& g,
                                   const VectorXd& va, const VectorXd& vb,
                                   const std::vector<VectorXd>& dva,
                                   const std::vector<VectorXd>& dvb) {
  KernelGradients l = node_matrix_grads(left, g);
  KernelGradients r = node_matrix_grads(right, g);
  VectorXd ua = VectorXd::Ones(va.size()) - va;
  VectorXd ub = VectorXd::Ones(vb.size()) - vb;
  MatrixXd wa = va * vb.transpose();
  MatrixXd wb = ua * ub.transpose();

  KernelGradients out;
  out.value = wa.cwiseProduct(l.value) + wb.cwiseProduct(r.value);
  for (size_t p = 0; p < dva.size(); ++p) {
    MatrixXd dwa = dva[p] * vb.transpose() + va * dvb[p].transpose();
    MatrixXd dwb = -(dva[p] * ub.transpose() + ua * dvb[p].transpose());
    out.grads.push_back(dwa.cwiseProduct(l.value) + dwb.cwiseProduct(r.value));
  }
  for (auto& m : l.grads) out.grads.push_back(wa.cwiseProduct(m));
  for (auto& m : r.grads) out.grads.push_back(wb.cwiseProduct(m));
  return out;
}

inline KernelGradients node_matrix_grads(const KernelExpr& e,
                                         const PairGrid& g) {
  return std::visit(
      [&](const auto& n) -> KernelGradients {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          KernelGradients out;
          base_matrix_grads(n, g, out);
          return out;
        } else if constexpr (std::is_same_v<T, SumNode>) {
          KernelGradients out = node_matrix_grads(n.children[0], g);
          for (size_t i = 1; i < n.children.size(); ++i) {
            KernelGradients c = node_matrix_grads(n.children[i], g);
            out.value += c.value;
            for (auto& m : c.grads) out.grads.push_back(std::move(m));
          }
          return out;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          const size_t m = n.children.size();
          std::vector<KernelGradients> parts;
          parts.reserve(m);
          for (const auto& c : n.children)
            parts.push_back(node_matrix_grads(c, g));
          // prefix[i] = product of values of children < i, suffix likewise.
          std::vector<MatrixXd> prefix(m), suffix(m);
          MatrixXd acc = MatrixXd::Ones(g.a.size(), g.b.size());
          for (size_t i = 0; i < m; ++i) {
            prefix[i] = acc;
            acc = acc.cwiseProduct(parts[i].value);
          }
          KernelGradients out;
          out.value = acc;
          acc = MatrixXd::Ones(g.a.size(), g.b.size());
          for (size_t i = m; i-- > 0;) {
            suffix[i] = acc;
            acc = acc.cwiseProduct(parts[i].value);
          }
          for (size_t i = 0; i < m; ++i) {
            MatrixXd others = prefix[i].cwiseProduct(suffix[i]);
            for (auto& dm : parts[i].grads)
              out.grads.push_back(others.cwiseProduct(dm));
          }
          return out;
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          const double st = n.sig.steepness;
          auto make = [&](const VectorXd& xs, VectorXd& s, VectorXd& dloc,
                          VectorXd& dlogst) {
            Eigen::ArrayXd t = ((n.sig.location - xs.array()) / st);
            Eigen::ArrayXd sech2 = 1.0 - t.tanh().square();
            s = (0.5 * (1.0 + t.tanh())).matrix();
            dloc = (0.5 * sech2 / st).matrix();
            dlogst = (-0.5 * sech2 * t).matrix();
          };
          VectorXd sa, sb, da_loc, db_loc, da_st, db_st;
          make(g.a, sa, da_loc, da_st);
          make(g.b, sb, db_loc, db_st);
          return blend_grads(n.children[0], n.children[1], g, sa, sb,
                             {da_loc, da_st}, {db_loc, db_st});
        } else {
          const double st = n.window.steepness;
          double lo = std::min(n.window.location1, n.window.location2);
          double hi = std::max(n.window.location1, n.window.location2);
          bool swapped = n.window.location1 > n.window.location2;
          auto make = [&](const VectorXd& xs, VectorXd& mask, VectorXd& dlo,
                          VectorXd& dhi, VectorXd& dlogst) {
            Eigen::ArrayXd tlo = (lo - xs.array()) / st;
            Eigen::ArrayXd thi = (hi - xs.array()) / st;
            Eigen::ArrayXd slo = 0.5 * (1.0 + tlo.tanh());
            Eigen::ArrayXd shi = 0.5 * (1.0 + thi.tanh());
            Eigen::ArrayXd dslo = 0.5 * (1.0 - tlo.tanh().square());
            Eigen::ArrayXd dshi = 0.5 * (1.0 - thi.tanh().square());
            mask = ((1.0 - slo) * shi).matrix();
            dlo = (-(dslo / st) * shi).matrix();
            dhi = ((1.0 - slo) * (dshi / st)).matrix();
            dlogst = (-(dslo * -tlo) * shi + (1.0 - slo) * (dshi * -thi))
                         .matrix();
          };
          VectorXd ma, mb, da_lo, db_lo, da_hi, db_hi, da_st, db_st;
          make(g.a, ma, da_lo, da_hi, da_st);
          make(g.b, mb, db_lo, db_hi, db_st);
          if (swapped) {
            std::swap(da_lo, da_hi);
            std::swap(db_lo, db_hi);
          }
          return blend_grads(n.children[0], n.children[1], g, ma, mb,
                             {da_lo, da_hi, da_st}, {db_lo, db_hi, db_st});
        }
      },
      e.node);
}

}  // namespace detail

// Gram matrix together with the gradient of every entry with respect to each
// packed parameter.  Gradient ordering matches pack_params.
inline KernelGradients kernel_gradients(const KernelExpr& e,
                                        const std::vector<double>& xs) {
  detail::PairGrid g(xs, xs);
  return detail::node_matrix_grads(e, g);
}

}  // namespace autostat
