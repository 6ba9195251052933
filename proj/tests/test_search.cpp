#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "autostat/search.hpp"
#include "oracles.hpp"

using namespace autostat;

namespace {

std::set<std::string> keys_of(const std::vector<KernelExpr>& es) {
  std::set<std::string> out;
  for (const auto& e : es) out.insert(structure_key(e));
  return out;
}

void collect_kinds(const KernelExpr& e, std::set<BaseKind>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          out.insert(n.kind);
        } else {
          for (const auto& c : n.children) collect_kinds(c, out);
        }
      },
      e.node);
}

bool kinds_within(const KernelExpr& e, const std::set<BaseKind>& allowed) {
  std::set<BaseKind> got;
  collect_kinds(e, got);
  for (BaseKind k : got)
    if (!allowed.count(k)) return false;
  return true;
}

Dataset wiggle_dataset(int n = 28) {
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = 6.0 * i / (n - 1);
    ys[i] = std::sin(2.0 * xs[i]) + 0.25 * xs[i];
  }
  return make_dataset(std::move(xs), std::move(ys), "wiggle");
}

SearchConfig small_cfg(Language l, int depth = 2, std::uint64_t seed = 5) {
  SearchConfig cfg;
  cfg.language = l;
  cfg.max_depth = depth;
  cfg.restarts = 1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("language names parse case-insensitively with short spellings") {
  CHECK(parse_language("full") == Language::Full);
  CHECK(parse_language("FULL") == Language::Full);
  CHECK(parse_language("se") == Language::SeOnly);
  CHECK(parse_language("SE_ONLY") == Language::SeOnly);
  CHECK(parse_language("linear") == Language::Linear);
  CHECK(parse_language("mkl") == Language::Mkl);
  CHECK(parse_language("tci") == Language::Tci);
  CHECK(parse_language("spectral") == Language::Spectral);
  CHECK(parse_language("changepoint") == Language::Changepoint);
  CHECK(!parse_language("bogus").has_value());
  CHECK(std::string(language_name(Language::SeOnly)) == "SE_ONLY");
}

TEST_CASE("expanding WN under FULL includes the five base additions") {
  SearchConfig cfg = small_cfg(Language::Full);
  std::vector<KernelExpr> cands = expand(wn(), cfg);
  std::set<std::string> keys = keys_of(cands);

  for (const char* want :
       {"WN + WN", "WN + C", "WN + SE", "WN + PER", "WN + LIN"}) {
    CAPTURE(want);
    CHECK(keys.count(want) == 1);
  }
  // Multiplications and base replacement are present too.
  CHECK(keys.count("WN * SE") == 1);
  CHECK(keys.count("SE") == 1);   // B -> B'
  CHECK(keys.count("CP(WN, WN)") == 1);
  CHECK(keys.count("CW(WN, WN)") == 1);
  CHECK(keys.count("CW(C, WN)") == 1);
  // No COS anywhere in the FULL grammar.
  for (const auto& c : cands)
    CHECK(kinds_within(c, {BaseKind::WN, BaseKind::C, BaseKind::SE,
                           BaseKind::PER, BaseKind::LIN}));
}

TEST_CASE("shrink operators drop sum addends and product factors") {
  SearchConfig cfg = small_cfg(Language::Full);
  std::vector<KernelExpr> cands = expand(se() + per(), cfg);
  std::set<std::string> keys = keys_of(cands);
  CHECK(keys.count("SE") == 1);
  CHECK(keys.count("PER") == 1);

  std::vector<KernelExpr> cands2 = expand(se() * per(), cfg);
  std::set<std::string> keys2 = keys_of(cands2);
  CHECK(keys2.count("SE") == 1);
  CHECK(keys2.count("PER") == 1);

  // Toggling the shrink operators off removes exactly those candidates.
  cfg.op_drop_sum_child = false;
  cfg.op_replace_with_base = false;
  std::vector<KernelExpr> cands3 = expand(se() + per(), cfg);
  std::set<std::string> keys3 = keys_of(cands3);
  CHECK(keys3.count("SE") == 0);
  CHECK(keys3.count("PER") == 0);
}

TEST_CASE("expansion deduplicates and never returns the incumbent") {
  SearchConfig cfg = small_cfg(Language::Full);
  std::vector<KernelExpr> incumbents = {wn(), se() + wn(), se() * per() + wn()};
  for (const auto& inc : incumbents) {
    std::vector<KernelExpr> cands = expand(inc, cfg);
    std::set<std::string> keys;
    for (const auto& c : cands) {
      auto [it, fresh] = keys.insert(structure_key(c));
      CHECK(fresh);  // already deduplicated
    }
    CHECK(keys.count(structure_key(inc)) == 0);
    // Every candidate round-trips through the text grammar.
    for (const auto& c : cands) {
      KernelExpr back = parse_kernel(print_kernel(c));
      CHECK(structure_key(back) == structure_key(c));
    }
  }
}

TEST_CASE("preset candidate sets match their contracts") {
  KernelExpr inc = se() + wn();

  SearchConfig mkl = small_cfg(Language::Mkl);
  std::vector<KernelExpr> mc = expand(inc, mkl);
  REQUIRE(mc.size() == 1);
  CHECK(structure_key(mc[0]) == "WN + SE + SE");

  SearchConfig tci = small_cfg(Language::Tci);
  std::set<std::string> tk = keys_of(expand(inc, tci));
  CHECK(tk == std::set<std::string>{"WN + SE + PER", "WN + SE + SE"});

  SearchConfig spectral = small_cfg(Language::Spectral);
  std::set<std::string> sk = keys_of(expand(inc, spectral));
  CHECK(sk == std::set<std::string>{"WN + SE + SE * COS"});

  CHECK(expand(inc, small_cfg(Language::SeOnly)).empty());
  CHECK(expand(inc, small_cfg(Language::Linear)).empty());
}

TEST_CASE("restriction soundness: no preset leaks foreign base kinds") {
  const std::set<BaseKind> full_kinds = {BaseKind::WN, BaseKind::C, BaseKind::SE,
                                         BaseKind::PER, BaseKind::LIN};
  std::vector<std::pair<Language, std::set<BaseKind>>> cases = {
      {Language::Full, full_kinds},
      {Language::Changepoint, {BaseKind::WN, BaseKind::SE}},
      {Language::Mkl, {BaseKind::WN, BaseKind::SE}},
      {Language::Tci, {BaseKind::WN, BaseKind::SE, BaseKind::PER}},
      {Language::Spectral, {BaseKind::WN, BaseKind::SE, BaseKind::COS}},
  };
  for (const auto& [lang, allowed] : cases) {
    SearchConfig cfg = small_cfg(lang);
    KernelExpr inc = initial_model(lang);
    for (int round = 0; round < 2; ++round) {
      std::vector<KernelExpr> cands = expand(inc, cfg);
      for (const auto& c : cands) {
        CAPTURE(language_name(lang), print_kernel(c));
        CHECK(kinds_within(c, allowed));
      }
      if (!cands.empty()) inc = cands.front();
    }
  }
}

TEST_CASE("distributing products turns product-of-sums into sum-of-products") {
  KernelExpr e = (se() + per()) * lin();
  KernelExpr d = canonicalize(distribute_products(e));
  CHECK(structure_key(d) == "SE * LIN + PER * LIN");

  // Nested case with a changepoint: children are distributed in place.
  SigmoidParams sig{0.0, 1.0};
  KernelExpr f = changepoint((se() + constant()) * wn(), per(), sig);
  KernelExpr df = distribute_products(f);
  REQUIRE(df.is_changepoint());
  const auto& cp = std::get<ChangepointNode>(df.node);
  CHECK(structure_key(cp.children[0]) == "WN * C + WN * SE");

  // Idempotent once distributed.
  CHECK(structure_key(distribute_products(d)) == structure_key(d));
}

TEST_CASE("greedy search improves BIC monotonically and is deterministic") {
  Dataset d = wiggle_dataset();
  SearchConfig cfg = small_cfg(Language::Full, 2, 11);

  SearchResult r1 = greedy_search(d, cfg);
  SearchResult r2 = greedy_search(d, cfg);

  CHECK(print_kernel(r1.best.kernel) == print_kernel(r2.best.kernel));
  CHECK(r1.best.bic_value == r2.best.bic_value);
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].chosen == r2.trace[i].chosen);
    CHECK(r1.trace[i].bic_value == r2.trace[i].bic_value);
  }

  // Monotone BIC across depths, and the scored-model identity at the end.
  for (size_t i = 0; i + 1 < r1.trace.size(); ++i)
    CHECK(r1.trace[i + 1].bic_value < r1.trace[i].bic_value);
  CHECK(r1.best.param_count == count_params(r1.best.kernel));
  CHECK(r1.best.bic_value ==
        Catch::Approx(bic(r1.best.log_ml, r1.best.param_count, d.n()))
            .margin(1e-9));

  // The structured data must beat a bare noise model.
  auto noise_only = score_model(wn(), d, 1, 11);
  REQUIRE(noise_only.has_value());
  CHECK(r1.best.bic_value < noise_only->bic_value);
}

TEST_CASE("depth budget of one performs exactly one expansion round") {
  Dataset d = wiggle_dataset(20);
  SearchConfig cfg = small_cfg(Language::Full, 1, 3);
  SearchResult r = greedy_search(d, cfg);
  CHECK(r.trace.size() <= 2);  // initial model plus at most one improvement
  CHECK(r.trace.front().depth == 0);
  if (r.trace.size() == 2) CHECK(r.trace.back().depth == 1);
}

TEST_CASE("fixed-model presets optimize without structural change") {
  Dataset d = wiggle_dataset(20);
  SearchResult se_r = greedy_search(d, small_cfg(Language::SeOnly, 3, 9));
  CHECK(structure_key(se_r.best.kernel) == "WN + SE");
  CHECK(se_r.trace.size() == 1);

  SearchResult lin_r = greedy_search(d, small_cfg(Language::Linear, 3, 9));
  CHECK(structure_key(lin_r.best.kernel) == "WN + C + LIN");
  CHECK(lin_r.trace.size() == 1);
}

TEST_CASE("interpretable mode keeps the incumbent in distributed form") {
  Dataset d = wiggle_dataset();
  SearchConfig cfg = small_cfg(Language::Full, 2, 11);
  cfg.interpretable = true;
  SearchResult r = greedy_search(d, cfg);
  // The chosen model never multiplies a sum: distributing is a no-op on it.
  CHECK(structure_key(distribute_products(r.best.kernel)) ==
        structure_key(r.best.kernel));
}

TEST_CASE("candidate RNG streams depend on structure only") {
  KernelExpr a = se() + wn();
  KernelExpr b = wn() + se();  // same canonical structure
  CHECK(detail::candidate_stream(canonicalize(a)) ==
        detail::candidate_stream(canonicalize(b)));
  CHECK(detail::candidate_stream(canonicalize(a)) !=
        detail::candidate_stream(canonicalize(se() * wn())));
}
