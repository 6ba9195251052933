#pragma once

// Greedy structure search over kernel expressions.  At each depth the
// incumbent is expanded by grammar operators into candidate structures, every
// structure not yet seen is optimized from its inherited parameters plus
// random restarts (scores are cached across depths), and the best BIC wins;
// the search stops when no candidate strictly improves BIC or the depth
// limit is reached.  Language presets restrict the candidate grammar to
// reproduce classic baseline model classes.

#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autostat/gp.hpp"
#include "autostat/kernel.hpp"
#include "autostat/parse.hpp"
#include "autostat/rng.hpp"
#include "autostat/util.hpp"

namespace autostat {

enum class Language { Full, SeOnly, Linear, Mkl, Tci, Spectral, Changepoint };

inline const char* language_name(Language l) {
  switch (l) {
    case Language::Full: return "FULL";
    case Language::SeOnly: return "SE_ONLY";
    case Language::Linear: return "LINEAR";
    case Language::Mkl: return "MKL";
    case Language::Tci: return "TCI";
    case Language::Spectral: return "SPECTRAL";
    case Language::Changepoint: return "CHANGEPOINT";
  }
  return "FULL";
}

// Accepts the short CLI spellings and the canonical names, case-insensitively.
inline std::optional<Language> parse_language(std::string_view text) {
  std::string v;
  v.reserve(text.size());
  for (char c : text)
    v.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  if (v == "full") return Language::Full;
  if (v == "se" || v == "se_only") return Language::SeOnly;
  if (v == "linear") return Language::Linear;
  if (v == "mkl") return Language::Mkl;
  if (v == "tci") return Language::Tci;
  if (v == "spectral") return Language::Spectral;
  if (v == "changepoint") return Language::Changepoint;
  return std::nullopt;
}

struct SearchConfig {
  int max_depth = 10;
  int restarts = 10;
  std::uint64_t seed = 0;
  Language language = Language::Full;
  bool interpretable = false;  // distribute products over sums before scoring
  int jobs = 1;
  // The four optional acceleration operators, individually toggleable.
  bool op_base_plus_const = true;     // S -> S*(B+C)
  bool op_replace_with_base = true;   // S -> B
  bool op_drop_sum_child = true;      // S+S' -> S
  bool op_drop_product_factor = true; // S*S' -> S
  // Data-derived defaults for freshly introduced changepoints; greedy_search
  // fills these in from the dataset before expanding.
  double cp_location = 0.0;
  double cp_steepness = 1.0;
  double cw_location1 = -1.0;
  double cw_location2 = 1.0;
};

// ---- subexpression addressing ----

namespace detail {

inline void collect_paths(const KernelExpr& e, std::vector<int>& cur,
                          std::vector<std::vector<int>>& out) {
  out.push_back(cur);
  auto recurse = [&](const std::vector<KernelExpr>& children) {
    for (size_t i = 0; i < children.size(); ++i) {
      cur.push_back(static_cast<int>(i));
      collect_paths(children[i], cur, out);
      cur.pop_back();
    }
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (!std::is_same_v<T, BaseNode>) recurse(n.children);
      },
      e.node);
}

inline std::vector<std::vector<int>> all_paths(const KernelExpr& e) {
  std::vector<int> cur;
  std::vector<std::vector<int>> out;
  collect_paths(e, cur, out);
  return out;
}

inline const KernelExpr& subexpr_at(const KernelExpr& e,
                                    const std::vector<int>& path,
                                    size_t from = 0) {
  if (from == path.size()) return e;
  const std::vector<KernelExpr>* children = std::visit(
      [](const auto& n) -> const std::vector<KernelExpr>* {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) return nullptr;
        else return &n.children;
      },
      e.node);
  return subexpr_at((*children)[static_cast<size_t>(path[from])], path,
                    from + 1);
}

inline KernelExpr replace_at(const KernelExpr& e, const std::vector<int>& path,
                             const KernelExpr& replacement, size_t from = 0) {
  if (from == path.size()) return replacement;
  KernelExpr copy = e;
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (!std::is_same_v<T, BaseNode>) {
          auto i = static_cast<size_t>(path[from]);
          n.children[i] = replace_at(n.children[i], path, replacement, from + 1);
        }
      },
      copy.node);
  return copy;
}

}  // namespace detail

// ---- interpretability rewrite ----

// Distributes every product over its sum children, so additive components
// are explicit during the search and BIC sees their duplicated parameters.
inline KernelExpr distribute_products(const KernelExpr& e) {
  return std::visit(
      [&](const auto& n) -> KernelExpr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          return e;
        } else if constexpr (std::is_same_v<T, SumNode>) {
          std::vector<KernelExpr> children;
          for (const auto& c : n.children)
            children.push_back(distribute_products(c));
          return sum(std::move(children));
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          // Cartesian product of the children's addends.
          std::vector<std::vector<KernelExpr>> addends{{}};
          for (const auto& c : n.children) {
            KernelExpr dc = distribute_products(c);
            std::vector<KernelExpr> parts;
            if (dc.is_sum()) parts = std::get<SumNode>(dc.node).children;
            else parts.push_back(std::move(dc));
            std::vector<std::vector<KernelExpr>> next;
            for (const auto& partial : addends)
              for (const auto& p : parts) {
                auto grown = partial;
                grown.push_back(p);
                next.push_back(std::move(grown));
              }
            addends = std::move(next);
          }
          std::vector<KernelExpr> terms;
          terms.reserve(addends.size());
          for (auto& factors : addends) terms.push_back(product(std::move(factors)));
          return sum(std::move(terms));
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          return changepoint(distribute_products(n.children[0]),
                             distribute_products(n.children[1]), n.sig);
        } else {
          return changewindow(distribute_products(n.children[0]),
                              distribute_products(n.children[1]), n.window);
        }
      },
      e.node);
}

// ---- candidate generation ----

inline KernelExpr initial_model(Language l) {
  switch (l) {
    case Language::SeOnly: return se() + wn();
    case Language::Linear: return constant() + lin() + wn();
    default: return wn();
  }
}

namespace detail {

inline std::vector<BaseKind> new_base_kinds(Language l) {
  switch (l) {
    case Language::Full:
      return {BaseKind::WN, BaseKind::C, BaseKind::SE, BaseKind::PER,
              BaseKind::LIN};
    case Language::Changepoint: return {BaseKind::SE};
    default: return {};
  }
}

// Generic grammar expansion used by the FULL and CHANGEPOINT presets.
inline void expand_grammar(const KernelExpr& incumbent, const SearchConfig& cfg,
                           std::vector<KernelExpr>& out) {
  const std::vector<BaseKind> kinds = new_base_kinds(cfg.language);
  const bool allow_const_ops = cfg.language == Language::Full;
  SigmoidParams cp_sig{cfg.cp_location, cfg.cp_steepness};
  WindowParams cw_win{cfg.cw_location1, cfg.cw_location2, cfg.cp_steepness};

  for (const auto& path : all_paths(incumbent)) {
    const KernelExpr& s = subexpr_at(incumbent, path);
    for (BaseKind k : kinds) {
      out.push_back(replace_at(incumbent, path, s + base(k)));  // S -> S+B
      out.push_back(replace_at(incumbent, path, s * base(k)));  // S -> S*B
      if (cfg.op_base_plus_const && allow_const_ops)            // S -> S*(B+C)
        out.push_back(replace_at(incumbent, path, s * (base(k) + constant())));
      if (cfg.op_replace_with_base)                             // S -> B
        out.push_back(replace_at(incumbent, path, base(k)));
    }
    if (s.is_base()) {  // B -> B'
      const auto& b = std::get<BaseNode>(s.node);
      for (BaseKind k : kinds) {
        if (k == b.kind) continue;
        BaseParams p;
        p.variance = b.params.variance;
        out.push_back(replace_at(incumbent, path, base(k, p)));
      }
    }
    out.push_back(  // S -> CP(S, S)
        replace_at(incumbent, path, changepoint(s, s, cp_sig)));
    out.push_back(  // S -> CW(S, S)
        replace_at(incumbent, path, changewindow(s, s, cw_win)));
    if (allow_const_ops) {  // S -> CW(S, C) and S -> CW(C, S)
      out.push_back(
          replace_at(incumbent, path, changewindow(s, constant(), cw_win)));
      out.push_back(
          replace_at(incumbent, path, changewindow(constant(), s, cw_win)));
    }
    // S+S' -> S and S*S' -> S: each child alone, and the node minus one child.
    auto shrink = [&](const std::vector<KernelExpr>& children, bool is_sum) {
      for (size_t i = 0; i < children.size(); ++i) {
        out.push_back(replace_at(incumbent, path, children[i]));
        if (children.size() > 2) {
          std::vector<KernelExpr> rest;
          for (size_t j = 0; j < children.size(); ++j)
            if (j != i) rest.push_back(children[j]);
          out.push_back(replace_at(
              incumbent, path,
              is_sum ? sum(std::move(rest)) : product(std::move(rest))));
        }
      }
    };
    if (s.is_sum() && cfg.op_drop_sum_child)
      shrink(std::get<SumNode>(s.node).children, true);
    if (s.is_product() && cfg.op_drop_product_factor)
      shrink(std::get<ProductNode>(s.node).children, false);
  }
}

}  // namespace detail

// All single-step expansions of the incumbent under the configured language,
// deduplicated by parameter-free canonical structure; candidates structurally
// identical to the incumbent are dropped.
inline std::vector<KernelExpr> expand(const KernelExpr& incumbent,
                                      const SearchConfig& cfg) {
  std::vector<KernelExpr> raw;
  switch (cfg.language) {
    case Language::SeOnly:
    case Language::Linear:
      break;  // fixed model: parameter optimization only
    case Language::Mkl:
      raw.push_back(incumbent + se());
      break;
    case Language::Tci:
      raw.push_back(incumbent + se());
      raw.push_back(incumbent + per());
      break;
    case Language::Spectral:
      raw.push_back(incumbent + se() * cosine());
      break;
    case Language::Full:
    case Language::Changepoint:
      detail::expand_grammar(incumbent, cfg, raw);
      break;
  }

  std::set<std::string> seen{structure_key(incumbent)};
  std::vector<KernelExpr> out;
  out.reserve(raw.size());
  for (auto& e : raw) {
    KernelExpr c = canonicalize(e);
    if (seen.insert(structure_key(c)).second) out.push_back(std::move(c));
  }
  return out;
}

// ---- greedy search ----

struct SearchStep {
  int depth = 0;
  int candidates_scored = 0;
  std::string chosen;  // canonical print, with parameters
  double log_ml = 0.0;
  double bic_value = 0.0;
  double elapsed_seconds = 0.0;  // wall clock; excluded from report artifacts
};

struct SearchResult {
  ScoredModel best;
  std::vector<SearchStep> trace;
};

namespace detail {

// Deterministic RNG stream for a candidate: depends only on the candidate's
// structure — never on scoring order, threads, or the depth at which the
// structure was first proposed.  A structure therefore always fits to the
// same result, which lets the search cache scores across depths.
inline std::uint64_t candidate_stream(const KernelExpr& e) {
  return derive_seed(stable_hash(structure_key(e)));
}

// Returns true when `a` is preferred over `b`: lower BIC, then fewer
// parameters, then lexicographically smaller canonical print.
inline bool better_model(const ScoredModel& a, const ScoredModel& b) {
  if (a.bic_value != b.bic_value) return a.bic_value < b.bic_value;
  if (a.param_count != b.param_count) return a.param_count < b.param_count;
  return print_kernel(a.kernel) < print_kernel(b.kernel);
}

}  // namespace detail

inline SearchResult greedy_search(const Dataset& data, SearchConfig cfg) {
  cfg.cp_location = 0.5 * (data.x_min() + data.x_max());
  cfg.cp_steepness = data.x_scale() / 10.0;
  cfg.cw_location1 = data.x_min() + data.x_scale() / 3.0;
  cfg.cw_location2 = data.x_min() + 2.0 * data.x_scale() / 3.0;

  auto scoring_form = [&](const KernelExpr& e) {
    return cfg.interpretable ? distribute_products(e) : e;
  };
  auto score = [&](const KernelExpr& model) {
    return score_model(model, data, cfg.restarts, cfg.seed,
                       detail::candidate_stream(model));
  };
  // Scores keyed by canonical structure.  Streams depend only on structure,
  // so a structure re-proposed at a later depth would refit identically;
  // the cache skips that redundant optimization.
  std::map<std::string, std::optional<ScoredModel>> cache;

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  SearchResult result;
  KernelExpr init = scoring_form(canonicalize(initial_model(cfg.language)));
  auto first = score(init);
  if (!first)
    throw std::runtime_error("initial model failed to optimize");
  cache.emplace(structure_key(init), first);
  result.best = std::move(*first);
  result.trace.push_back({0, 1, print_kernel(result.best.kernel),
                          result.best.log_ml, result.best.bic_value,
                          elapsed()});
  log_info("depth 0: " + print_kernel(result.best.kernel) +
           "  bic=" + std::to_string(result.best.bic_value));

  for (int depth = 1; depth <= cfg.max_depth; ++depth) {
    std::vector<KernelExpr> candidates = expand(result.best.kernel, cfg);
    if (candidates.empty()) break;

    t0 = std::chrono::steady_clock::now();
    std::vector<KernelExpr> forms;
    std::vector<std::string> keys;
    forms.reserve(candidates.size());
    keys.reserve(candidates.size());
    std::vector<size_t> fresh;  // candidate indices needing a new fit
    std::set<std::string> queued;
    for (const auto& c : candidates) {
      forms.push_back(scoring_form(c));
      keys.push_back(structure_key(forms.back()));
      if (!cache.count(keys.back()) && queued.insert(keys.back()).second)
        fresh.push_back(keys.size() - 1);
    }
    std::vector<std::optional<ScoredModel>> fresh_scored(fresh.size());
    parallel_for(static_cast<int>(fresh.size()), cfg.jobs, [&](int i) {
      auto& slot = fresh_scored[static_cast<size_t>(i)];
      slot = score(forms[fresh[static_cast<size_t>(i)]]);
      if (slot)
        log_debug("  cand " + print_kernel(slot->kernel) +
                  "  bic=" + std::to_string(slot->bic_value));
    });
    for (size_t i = 0; i < fresh.size(); ++i)
      cache.emplace(keys[fresh[i]], std::move(fresh_scored[i]));

    const ScoredModel* winner = nullptr;
    int n_scored = 0;
    std::set<std::string> counted;
    for (const auto& key : keys) {
      const auto& s = cache.at(key);
      if (!s || !counted.insert(key).second) continue;
      ++n_scored;
      if (!winner || detail::better_model(*s, *winner)) winner = &*s;
    }
    if (!winner || winner->bic_value >= result.best.bic_value) break;

    result.best = *winner;
    result.trace.push_back({depth, n_scored, print_kernel(result.best.kernel),
                            result.best.log_ml, result.best.bic_value,
                            elapsed()});
    log_info("depth " + std::to_string(depth) + ": " +
             print_kernel(result.best.kernel) +
             "  bic=" + std::to_string(result.best.bic_value));
  }
  return result;
}

}  // namespace autostat
