#pragma once

// Rewriting kernel expressions into sum-of-products normal form.
//
// Changepoints expand into sigmoid-masked products, products distribute over
// sums, and each resulting product is simplified:
//   SE * SE -> SE        (1/l^2 = 1/l1^2 + 1/l2^2, variances multiply)
//   WN * stationary -> WN  (stationary factor contributes its diagonal value)
//   C * k -> k           (variance scaled)
// Each term ends up as  core * prod(LIN) * prod(sigmoid masks)  where the
// core is one of WN, C, SE, a product of PER/COS factors, or SE times such a
// product.  Sigmoid masks stay symbolic so the description layer can render
// them as "applies until/from" phrases.

#include <optional>
#include <variant>
#include <vector>

#include "autostat/kernel.hpp"
#include "autostat/parse.hpp"

namespace autostat {

enum class SigmoidKind {
  Until,      // sigma(x) sigma(x'): mass before the location
  From,       // (1-sigma(x))(1-sigma(x')): mass after the location
  InWindow,   // window mask m(x) m(x')
  OutWindow,  // (1-m(x))(1-m(x'))
};

struct SigmoidFactor {
  SigmoidKind kind = SigmoidKind::Until;
  double location = 0.0;    // window: lower edge
  double location2 = 0.0;   // window: upper edge
  double steepness = 1.0;
};

struct ProductTerm {
  std::optional<BaseParams> wn;       // absorbs cst/se/pers/coss; keeps lins
  std::optional<BaseParams> cst;      // exclusive with wn/se/per/cos/lin
  std::optional<BaseParams> se;
  std::vector<BaseParams> pers;
  std::vector<BaseParams> coss;
  std::vector<BaseParams> lins;
  std::vector<SigmoidFactor> sigmoids;

  bool is_noise() const { return wn.has_value(); }
};

struct NormalForm {
  std::vector<ProductTerm> terms;
};

// One multiplicand of an expanded product: a base kernel or a sigmoid mask.
using TermFactor = std::variant<BaseNode, SigmoidFactor>;
using FactorList = std::vector<TermFactor>;

namespace detail {

inline std::vector<double> sigmoid_tuple(const SigmoidFactor& s) {
  return {static_cast<double>(s.kind), s.location, s.location2, s.steepness};
}

inline bool base_params_less(const BaseParams& a, const BaseParams& b,
                             BaseKind kind) {
  BaseNode na{kind, a}, nb{kind, b};
  return compare_doubles(base_param_tuple(na), base_param_tuple(nb)) < 0;
}

inline bool sigmoid_less(const SigmoidFactor& a, const SigmoidFactor& b) {
  return compare_doubles(sigmoid_tuple(a), sigmoid_tuple(b)) < 0;
}

}  // namespace detail

// Applies the simplification identities to a single product of factors.
inline ProductTerm simplify_product(const FactorList& factors) {
  ProductTerm term;
  double scale = 1.0;        // accumulated C variances
  double wn_variance = 1.0;  // product of WN variances, if any WN present
  bool has_wn = false;
  std::vector<BaseParams> ses;

  for (const auto& f : factors) {
    if (std::holds_alternative<SigmoidFactor>(f)) {
      term.sigmoids.push_back(std::get<SigmoidFactor>(f));
      continue;
    }
    const BaseNode& b = std::get<BaseNode>(f);
    switch (b.kind) {
      case BaseKind::WN:
        has_wn = true;
        wn_variance *= b.params.variance;
        break;
      case BaseKind::C: scale *= b.params.variance; break;
      case BaseKind::SE: ses.push_back(b.params); break;
      case BaseKind::PER: term.pers.push_back(b.params); break;
      case BaseKind::COS: term.coss.push_back(b.params); break;
      case BaseKind::LIN: term.lins.push_back(b.params); break;
    }
  }

  std::sort(term.pers.begin(), term.pers.end(),
            [](const BaseParams& a, const BaseParams& b) {
              return detail::base_params_less(a, b, BaseKind::PER);
            });
  std::sort(term.coss.begin(), term.coss.end(),
            [](const BaseParams& a, const BaseParams& b) {
              return detail::base_params_less(a, b, BaseKind::COS);
            });
  std::sort(term.lins.begin(), term.lins.end(),
            [](const BaseParams& a, const BaseParams& b) {
              return detail::base_params_less(a, b, BaseKind::LIN);
            });
  std::sort(term.sigmoids.begin(), term.sigmoids.end(), detail::sigmoid_less);

  if (has_wn) {
    // WN absorbs every stationary factor through its diagonal value, which
    // for C, SE, PER and COS is exactly the variance.
    double v = wn_variance * scale;
    for (const auto& p : ses) v *= p.variance;
    for (const auto& p : term.pers) v *= p.variance;
    for (const auto& p : term.coss) v *= p.variance;
    term.pers.clear();
    term.coss.clear();
    BaseParams wnp;
    wnp.variance = v;
    term.wn = wnp;
    return term;
  }

  if (!ses.empty()) {
    // A lone SE keeps its lengthscale bit-for-bit (1/sqrt(1/l^2) would not
    // round-trip), which makes re-simplification an exact fixed point.
    BaseParams merged = ses.front();
    merged.variance *= scale;
    if (ses.size() > 1) {
      merged.variance = scale;
      double inv_sq = 0.0;
      for (const auto& p : ses) {
        merged.variance *= p.variance;
        inv_sq += 1.0 / (p.lengthscale * p.lengthscale);
      }
      merged.lengthscale = 1.0 / std::sqrt(inv_sq);
    }
    term.se = merged;
    return term;
  }

  if (!term.pers.empty()) {
    term.pers.front().variance *= scale;
    return term;
  }
  if (!term.coss.empty()) {
    term.coss.front().variance *= scale;
    return term;
  }
  if (!term.lins.empty()) {
    term.lins.front().variance *= scale;
    return term;
  }
  // Nothing left but C factors (or bare sigmoid masks): a constant term.
  BaseParams cp;
  cp.variance = scale;
  term.cst = cp;
  return term;
}

// Decomposes a simplified term back into its factor list.
inline FactorList term_factors(const ProductTerm& t) {
  FactorList fs;
  if (t.wn) fs.push_back(BaseNode{BaseKind::WN, *t.wn});
  if (t.cst) fs.push_back(BaseNode{BaseKind::C, *t.cst});
  if (t.se) fs.push_back(BaseNode{BaseKind::SE, *t.se});
  for (const auto& p : t.pers) fs.push_back(BaseNode{BaseKind::PER, p});
  for (const auto& p : t.coss) fs.push_back(BaseNode{BaseKind::COS, p});
  for (const auto& p : t.lins) fs.push_back(BaseNode{BaseKind::LIN, p});
  for (const auto& s : t.sigmoids) fs.push_back(s);
  return fs;
}

namespace detail {

inline std::vector<FactorList> expand_to_products(const KernelExpr& e) {
  return std::visit(
      [](const auto& n) -> std::vector<FactorList> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          return {FactorList{TermFactor{n}}};
        } else if constexpr (std::is_same_v<T, SumNode>) {
          std::vector<FactorList> out;
          for (const auto& c : n.children) {
            auto sub = expand_to_products(c);
            out.insert(out.end(), std::make_move_iterator(sub.begin()),
                       std::make_move_iterator(sub.end()));
          }
          return out;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          std::vector<FactorList> out{FactorList{}};
          for (const auto& c : n.children) {
            auto sub = expand_to_products(c);
            std::vector<FactorList> next;
            next.reserve(out.size() * sub.size());
            for (const auto& lhs : out) {
              for (const auto& rhs : sub) {
                FactorList fl = lhs;
                fl.insert(fl.end(), rhs.begin(), rhs.end());
                next.push_back(std::move(fl));
              }
            }
            out = std::move(next);
          }
          return out;
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          SigmoidFactor until{SigmoidKind::Until, n.sig.location, 0.0,
                              n.sig.steepness};
          SigmoidFactor from{SigmoidKind::From, n.sig.location, 0.0,
                             n.sig.steepness};
          std::vector<FactorList> out;
          for (auto& fl : expand_to_products(n.children[0])) {
            fl.push_back(until);
            out.push_back(std::move(fl));
          }
          for (auto& fl : expand_to_products(n.children[1])) {
            fl.push_back(from);
            out.push_back(std::move(fl));
          }
          return out;
        } else {
          SigmoidFactor in{SigmoidKind::InWindow, n.window.location1,
                           n.window.location2, n.window.steepness};
          SigmoidFactor outw{SigmoidKind::OutWindow, n.window.location1,
                            n.window.location2, n.window.steepness};
          std::vector<FactorList> out;
          for (auto& fl : expand_to_products(n.children[0])) {
            fl.push_back(in);
            out.push_back(std::move(fl));
          }
          for (auto& fl : expand_to_products(n.children[1])) {
            fl.push_back(outw);
            out.push_back(std::move(fl));
          }
          return out;
        }
      },
      e.node);
}

// Signature string plus flattened parameters; a total order on terms.
inline std::pair<std::string, std::vector<double>> term_key(
    const ProductTerm& t) {
  std::string sig;
  std::vector<double> params;
  auto add = [&](const char* tag, const std::vector<double>& vals) {
    sig += tag;
    sig += '|';
    params.insert(params.end(), vals.begin(), vals.end());
  };
  if (t.wn) add("WN", {t.wn->variance});
  if (t.cst) add("C", {t.cst->variance});
  if (t.se) add("SE", {t.se->variance, t.se->lengthscale});
  for (const auto& p : t.pers)
    add("PER", {p.variance, p.lengthscale, p.period});
  for (const auto& p : t.coss) add("COS", {p.variance, p.period});
  for (const auto& p : t.lins) add("LIN", {p.variance, p.offset});
  for (const auto& s : t.sigmoids) {
    switch (s.kind) {
      case SigmoidKind::Until: add("su", {s.location, s.steepness}); break;
      case SigmoidKind::From: add("sf", {s.location, s.steepness}); break;
      case SigmoidKind::InWindow:
        add("wi", {s.location, s.location2, s.steepness});
        break;
      case SigmoidKind::OutWindow:
        add("wo", {s.location, s.location2, s.steepness});
        break;
    }
  }
  return {std::move(sig), std::move(params)};
}

inline bool term_less(const ProductTerm& a, const ProductTerm& b) {
  auto ka = term_key(a), kb = term_key(b);
  if (ka.first != kb.first) return ka.first < kb.first;
  return compare_doubles(ka.second, kb.second) < 0;
}

}  // namespace detail

inline NormalForm to_normal_form(const KernelExpr& e) {
  NormalForm nf;
  for (const auto& fl : detail::expand_to_products(e))
    nf.terms.push_back(simplify_product(fl));
  std::sort(nf.terms.begin(), nf.terms.end(), detail::term_less);
  return nf;
}

// Re-runs simplification on an already simplified form.  A fixed point of
// the rewrite system, which the property tests assert.
inline NormalForm renormalize(const NormalForm& nf) {
  NormalForm out;
  for (const auto& t : nf.terms) out.terms.push_back(simplify_product(term_factors(t)));
  std::sort(out.terms.begin(), out.terms.end(), detail::term_less);
  return out;
}

inline bool terms_equal(const ProductTerm& a, const ProductTerm& b) {
  return detail::term_key(a) == detail::term_key(b);
}

inline bool normal_forms_equal(const NormalForm& a, const NormalForm& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (size_t i = 0; i < a.terms.size(); ++i)
    if (!terms_equal(a.terms[i], b.terms[i])) return false;
  return true;
}

// Readable rendering of a term, e.g. "SE(1,2) * sigma(1700, 10)".
inline std::string print_term(const ProductTerm& t, bool with_params = true) {
  std::string out;
  auto sep = [&] {
    if (!out.empty()) out += " * ";
  };
  auto base_str = [&](BaseKind kind, const BaseParams& p) {
    sep();
    KernelExpr b = base(kind, p);
    detail::print_into(b, out, with_params);
  };
  if (t.wn) base_str(BaseKind::WN, *t.wn);
  if (t.cst) base_str(BaseKind::C, *t.cst);
  if (t.se) base_str(BaseKind::SE, *t.se);
  for (const auto& p : t.pers) base_str(BaseKind::PER, p);
  for (const auto& p : t.coss) base_str(BaseKind::COS, p);
  for (const auto& p : t.lins) base_str(BaseKind::LIN, p);
  for (const auto& s : t.sigmoids) {
    sep();
    switch (s.kind) {
      case SigmoidKind::Until: out += "sigma"; break;
      case SigmoidKind::From: out += "sigmabar"; break;
      case SigmoidKind::InWindow: out += "window"; break;
      case SigmoidKind::OutWindow: out += "antiwindow"; break;
    }
    if (with_params) {
      out += '(';
      out += format_double(s.location);
      if (s.kind == SigmoidKind::InWindow || s.kind == SigmoidKind::OutWindow) {
        out += ", ";
        out += format_double(s.location2);
      }
      out += ", ";
      out += format_double(s.steepness);
      out += ')';
    }
  }
  if (out.empty()) out = "C(1)";
  return out;
}

}  // namespace autostat
