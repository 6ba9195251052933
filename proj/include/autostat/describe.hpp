#pragma once

// Natural-language description of additive components.  Each simplified
// product term becomes an English noun phrase: a head noun chosen by factor
// rank (periodic > {noise, smooth, constant} > linear products > sigmoid
// masks), premodifiers and postmodifiers contributed by the remaining
// factors, plus refinements driven by fitted parameter values and the data.
// Components are ordered by greedy reduction of 10-fold cross-validated MAE.

#include <Eigen/Core>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "autostat/eval.hpp"
#include "autostat/gp.hpp"
#include "autostat/normal_form.hpp"

namespace autostat {

enum class HeadNoun {
  Periodic,
  Sinusoid,
  Noise,
  Smooth,
  Constant,
  LinearProduct,
  SigmoidOnly,
};

inline const char* head_noun_name(HeadNoun h) {
  switch (h) {
    case HeadNoun::Periodic: return "PER";
    case HeadNoun::Sinusoid: return "COS";
    case HeadNoun::Noise: return "WN";
    case HeadNoun::Smooth: return "SE";
    case HeadNoun::Constant: return "C";
    case HeadNoun::LinearProduct: return "LIN_PRODUCT";
    case HeadNoun::SigmoidOnly: return "SIGMOID_PRODUCT";
  }
  return "?";
}

// Factor rank: PER (and COS) outrank the stationary class {WN, SE, C}, which
// outranks products of LIN, which outrank bare sigmoid masks.  Within the
// stationary class at most one factor survives simplification, so no tie.
inline HeadNoun choose_head_noun(const ProductTerm& t) {
  if (!t.pers.empty()) return HeadNoun::Periodic;
  if (!t.coss.empty()) return HeadNoun::Sinusoid;
  if (t.wn) return HeadNoun::Noise;
  if (t.se) return HeadNoun::Smooth;
  if (t.cst) return HeadNoun::Constant;
  if (!t.lins.empty()) return HeadNoun::LinearProduct;
  return HeadNoun::SigmoidOnly;
}

// Optional data-derived context; everything missing degrades gracefully to
// purely structural text.
struct DescriptionContext {
  std::string x_unit;
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::optional<double> slope;  // fitted component posterior mean trend
};

namespace detail {

inline std::string format_quantity(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string unit_for(double v, const std::string& unit) {
  if (unit.empty()) return {};
  if (std::abs(v - 1.0) <= 0.02 || unit.back() == 's') return " " + unit;
  return " " + unit + "s";
}

inline std::string quantity_with_unit(double v, const std::string& unit) {
  return format_quantity(v) + unit_for(v, unit);
}

inline std::string period_phrase(double period, const std::string& x_unit) {
  if (x_unit == "year" && std::abs(period - 1.0) <= 0.02)
    return "a period of 1 year (yearly)";
  return "a period of " + quantity_with_unit(period, x_unit);
}

// "a"/"an" by the first word's initial sound, with the usual exceptions for
// vowel letters pronounced as consonants.
inline std::string determiner(const std::string& phrase) {
  static const char* kConsonantSoundPrefixes[] = {"uni", "use", "one", "eu"};
  if (phrase.empty()) return "a";
  for (const char* p : kConsonantSoundPrefixes)
    if (phrase.rfind(p, 0) == 0) return "a";
  char c = static_cast<char>(std::tolower(phrase[0]));
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an"
                                                                    : "a";
}

inline std::string join_words(const std::vector<std::string>& parts,
                              const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Direction of a linear amplitude factor |x - offset|: monotone over the
// data only when the offset lies outside the observed range.
inline std::string amplitude_direction(const BaseParams& lin,
                                       const DescriptionContext& ctx) {
  if (ctx.x_min && ctx.x_max) {
    if (lin.offset <= *ctx.x_min) return "increasing";
    if (lin.offset >= *ctx.x_max) return "decreasing";
  }
  return "varying";
}

// Locations are coordinates on the x axis, not durations, so they render
// without a unit word ("until 1700", never "until 1700 years").
inline std::string sigmoid_clause(const SigmoidFactor& s) {
  switch (s.kind) {
    case SigmoidKind::Until:
      return "until " + format_quantity(s.location);
    case SigmoidKind::From:
      return "from " + format_quantity(s.location);
    case SigmoidKind::InWindow:
      return "between " + format_quantity(s.location) + " and " +
             format_quantity(s.location2);
    case SigmoidKind::OutWindow:
      return "before " + format_quantity(s.location) + " and after " +
             format_quantity(s.location2);
  }
  return {};
}

}  // namespace detail

// One-line noun phrase for a simplified term, e.g.
// "a periodic function with linearly varying amplitude which applies until
// 1700".  Lowercase; callers capitalize when forming sentences.
inline std::string describe_term(const ProductTerm& t,
                                 const DescriptionContext& ctx = {}) {
  const HeadNoun head = choose_head_noun(t);
  std::vector<std::string> premods;
  std::string noun;
  bool mass_noun = false;
  size_t pers_from = 0, coss_from = 0;

  switch (head) {
    case HeadNoun::Noise:
      noun = "uncorrelated noise";
      mass_noun = true;
      break;
    case HeadNoun::Constant:
    case HeadNoun::SigmoidOnly:
      noun = "constant";
      break;
    case HeadNoun::Smooth: {
      noun = "smooth function";
      if (ctx.x_min && ctx.x_max && *ctx.x_max > *ctx.x_min) {
        double range = *ctx.x_max - *ctx.x_min;
        if (t.se->lengthscale < range / 50.0) {
          premods.push_back("rapidly varying");
        } else if (t.se->lengthscale > range / 2.0) {
          premods.push_back("very smoothly varying");
          noun = "function";
        }
      }
      break;
    }
    case HeadNoun::Periodic:
      noun = "periodic function";
      if (t.se) premods.push_back("approximately");
      pers_from = 1;
      break;
    case HeadNoun::Sinusoid:
      noun = "sinusoidal function";
      if (t.se) premods.push_back("approximately");
      coss_from = 1;
      break;
    case HeadNoun::LinearProduct:
      if (t.lins.size() >= 2) {
        noun = "polynomial";
      } else if (ctx.slope && *ctx.slope != 0.0) {
        noun = *ctx.slope > 0.0 ? "linearly increasing function"
                                : "linearly decreasing function";
      } else {
        noun = "linear function";
      }
      break;
  }

  std::vector<std::string> posts;
  if ((head == HeadNoun::Periodic || head == HeadNoun::Sinusoid) &&
      t.lins.empty()) {
    double p = head == HeadNoun::Periodic ? t.pers.front().period
                                          : t.coss.front().period;
    posts.push_back("with " + detail::period_phrase(p, ctx.x_unit));
  }
  for (size_t i = pers_from; i < t.pers.size(); ++i)
    posts.push_back("modulated by a periodic function with " +
                    detail::period_phrase(t.pers[i].period, ctx.x_unit));
  for (size_t i = coss_from; i < t.coss.size(); ++i)
    posts.push_back("modulated by a sinusoidal function with " +
                    detail::period_phrase(t.coss[i].period, ctx.x_unit));
  if (head != HeadNoun::LinearProduct && !t.lins.empty()) {
    if (t.lins.size() >= 2) {
      posts.push_back("with polynomially varying amplitude");
    } else {
      posts.push_back("with linearly " +
                      detail::amplitude_direction(t.lins.front(), ctx) +
                      " amplitude");
    }
  }
  if (!t.sigmoids.empty()) {
    std::vector<std::string> clauses;
    clauses.reserve(t.sigmoids.size());
    for (const auto& s : t.sigmoids)
      clauses.push_back(detail::sigmoid_clause(s));
    posts.push_back("which applies " + detail::join_words(clauses, " and "));
  }

  std::string phrase;
  if (!mass_noun) {
    phrase = detail::determiner(premods.empty() ? noun : premods.front());
    phrase += " ";
  }
  for (const auto& pm : premods) phrase += pm + " ";
  phrase += noun;
  for (const auto& po : posts) phrase += " " + po;
  return phrase;
}

// Additional parameter sentences for the long-form report text.
inline std::string describe_term_details(const ProductTerm& t,
                                         const DescriptionContext& ctx = {}) {
  std::vector<std::string> sentences;
  if (t.wn)
    sentences.push_back("This component models uncorrelated measurement noise");
  if (t.cst) sentences.push_back("This component is a constant offset");
  if (t.se)
    sentences.push_back(
        "The smooth variation has a lengthscale of " +
        detail::quantity_with_unit(t.se->lengthscale, ctx.x_unit));
  for (const auto& p : t.pers)
    sentences.push_back("The periodic repetition has " +
                        detail::period_phrase(p.period, ctx.x_unit));
  for (const auto& p : t.coss)
    sentences.push_back("The sinusoidal repetition has " +
                        detail::period_phrase(p.period, ctx.x_unit));
  for (const auto& l : t.lins) {
    std::string dir = detail::amplitude_direction(l, ctx);
    if (choose_head_noun(t) == HeadNoun::LinearProduct && t.lins.size() == 1) {
      sentences.push_back("The linear trend crosses zero at " +
                          detail::format_quantity(l.offset));
    } else {
      sentences.push_back("The amplitude is linearly " + dir +
                          ", vanishing at " + detail::format_quantity(l.offset));
    }
  }
  for (const auto& s : t.sigmoids)
    sentences.push_back("This component applies " +
                        detail::sigmoid_clause(s));
  std::string out;
  for (const auto& s : sentences) out += s + ". ";
  if (!out.empty()) out.pop_back();
  return out;
}

// ---- component ordering by cross-validated error ----

struct ComponentOrdering {
  std::vector<int> order;          // permutation of term indices
  std::vector<double> mae_after;   // CV MAE after including each component
  std::vector<double> reduction;   // previous MAE minus new MAE
  std::vector<char> improves;      // reduction strictly positive
  double baseline_mae = 0.0;       // MAE of predicting the training mean
};

// Greedy forward selection over components: each step adds the component
// whose inclusion most reduces 10-fold cross-validated MAE, where fold
// predictions condition on the full model's Gram matrix restricted to the
// chosen components' cross-covariances.  Folds are contiguous blocks of the
// time-ordered data.  Components that no longer reduce the error are
// appended in term order and flagged.
inline ComponentOrdering order_components(const NormalForm& nf,
                                          const Dataset& data) {
  const int n = data.n();
  const int m = static_cast<int>(nf.terms.size());
  ComponentOrdering result;
  Eigen::VectorXd y_orig(n);
  for (int i = 0; i < n; ++i) y_orig[i] = data.ys[i];
  Eigen::VectorXd z = data.standardized_y();

  Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(n, m);
  const int folds = std::min(10, n);
  for (int f = 0; f < folds; ++f) {
    const int lo = f * n / folds, hi = (f + 1) * n / folds;
    if (lo == hi) continue;
    std::vector<double> xs_tr, xs_te(data.xs.begin() + lo,
                                     data.xs.begin() + hi);
    Eigen::VectorXd z_tr(n - (hi - lo));
    int k = 0;
    for (int i = 0; i < n; ++i) {
      if (i >= lo && i < hi) continue;
      xs_tr.push_back(data.xs[i]);
      z_tr[k++] = z[i];
    }
    Eigen::MatrixXd gram =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs_tr.size()),
                              static_cast<Eigen::Index>(xs_tr.size()));
    for (const auto& t : nf.terms) gram += term_matrix(t, xs_tr, xs_tr);
    FactoredGram g = factor_with_jitter(gram);
    Eigen::VectorXd alpha = g.llt.solve(z_tr);
    for (int ti = 0; ti < m; ++ti)
      pred.block(lo, ti, hi - lo, 1) =
          term_matrix(nf.terms[static_cast<size_t>(ti)], xs_te, xs_tr) * alpha;
  }

  auto mae_of = [&](const Eigen::VectorXd& z_hat) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += std::abs(y_orig[i] - (data.y_mean + data.y_std * z_hat[i]));
    return s / static_cast<double>(n);
  };

  Eigen::VectorXd current = Eigen::VectorXd::Zero(n);
  result.baseline_mae = mae_of(current);
  double cur_mae = result.baseline_mae;
  std::vector<int> remaining;
  for (int i = 0; i < m; ++i) remaining.push_back(i);

  bool greedy = true;
  while (!remaining.empty()) {
    int best_i = -1;
    double best_mae = 0.0;
    if (greedy) {
      for (int i : remaining) {
        double mm = mae_of(current + pred.col(i));
        if (best_i < 0 || mm < best_mae) {
          best_i = i;
          best_mae = mm;
        }
      }
      if (best_mae > cur_mae) greedy = false;  // nothing helps any more
    }
    if (!greedy) {  // append the rest in term order, flagged
      best_i = remaining.front();
      best_mae = mae_of(current + pred.col(best_i));
    }
    current += pred.col(best_i);
    result.order.push_back(best_i);
    result.mae_after.push_back(best_mae);
    result.reduction.push_back(cur_mae - best_mae);
    result.improves.push_back(greedy && cur_mae - best_mae > 0.0 ? 1 : 0);
    cur_mae = best_mae;
    remaining.erase(std::find(remaining.begin(), remaining.end(), best_i));
  }
  return result;
}

// ---- whole-model description ----

struct ComponentDescription {
  int term_index = 0;  // into NormalForm::terms
  std::string summary;
  std::string full_text;
  HeadNoun head_noun_kind = HeadNoun::Noise;
  double cv_mae = 0.0;
  double cv_mae_reduction = 0.0;
  bool improves_cv = true;
};

struct ModelDescription {
  std::vector<ComponentDescription> components;  // presentation order
  ComponentOrdering ordering;
};

namespace detail {

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z')
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// Least-squares slope of a component's posterior mean over the inputs.
inline double series_slope(const std::vector<double>& xs,
                           const std::vector<double>& ms) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ms[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ms[i];
  }
  double denom = n * sxx - sx * sx;
  return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

}  // namespace detail

// Orders the components by cross-validated error reduction and renders each
// one, using the component posteriors at the training inputs for the
// data-driven refinements.
inline ModelDescription describe_model(
    const NormalForm& nf, const Dataset& data,
    const std::vector<PosteriorComponent>& components_at_train) {
  ModelDescription out;
  out.ordering = order_components(nf, data);
  for (size_t pos = 0; pos < out.ordering.order.size(); ++pos) {
    int ti = out.ordering.order[pos];
    const ProductTerm& term = nf.terms[static_cast<size_t>(ti)];
    DescriptionContext ctx;
    ctx.x_unit = data.x_unit;
    ctx.x_min = data.x_min();
    ctx.x_max = data.x_max();
    if (static_cast<size_t>(ti) < components_at_train.size())
      ctx.slope = detail::series_slope(
          data.xs, components_at_train[static_cast<size_t>(ti)].mean);

    ComponentDescription cd;
    cd.term_index = ti;
    cd.head_noun_kind = choose_head_noun(term);
    cd.summary = describe_term(term, ctx);
    std::string details = describe_term_details(term, ctx);
    cd.full_text = detail::capitalize(cd.summary) + ".";
    if (!details.empty()) cd.full_text += " " + details;  // ends with '.'
    cd.cv_mae = out.ordering.mae_after[pos];
    cd.cv_mae_reduction = out.ordering.reduction[pos];
    cd.improves_cv = out.ordering.improves[pos] != 0;
    out.components.push_back(std::move(cd));
  }
  return out;
}

}  // namespace autostat
