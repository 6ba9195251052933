#pragma once

// Symbolic kernel expressions: the model language, canonical ordering,
// parameter counting and packing into a flat optimizer vector.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace autostat {

// Declaration order doubles as the canonical sort order for printing
// and tie-breaking: WN < C < SE < PER < COS < LIN.
enum class BaseKind { WN = 0, C, SE, PER, COS, LIN };

inline const char* base_name(BaseKind k) {
  switch (k) {
    case BaseKind::WN: return "WN";
    case BaseKind::C: return "C";
    case BaseKind::SE: return "SE";
    case BaseKind::PER: return "PER";
    case BaseKind::COS: return "COS";
    case BaseKind::LIN: return "LIN";
  }
  return "?";
}

inline int base_param_count(BaseKind k) {
  switch (k) {
    case BaseKind::WN:
    case BaseKind::C: return 1;
    case BaseKind::SE:
    case BaseKind::COS:
    case BaseKind::LIN: return 2;
    case BaseKind::PER: return 3;
  }
  return 0;
}

// Superset of the per-kind parameters; only the fields relevant to a kind
// are meaningful (variance always; lengthscale for SE/PER; offset for LIN;
// period for PER/COS).
struct BaseParams {
  double variance = 1.0;
  double lengthscale = 1.0;
  double offset = 0.0;
  double period = 1.0;
};

struct SigmoidParams {
  double location = 0.0;
  double steepness = 1.0;
};

struct WindowParams {
  double location1 = 0.0;
  double location2 = 1.0;
  double steepness = 1.0;
};

struct KernelExpr;

struct BaseNode {
  BaseKind kind = BaseKind::WN;
  BaseParams params;
};

struct SumNode {
  std::vector<KernelExpr> children;  // >= 2
};

struct ProductNode {
  std::vector<KernelExpr> children;  // >= 2
};

struct ChangepointNode {
  std::vector<KernelExpr> children;  // exactly 2: before, after
  SigmoidParams sig;
};

struct ChangewindowNode {
  std::vector<KernelExpr> children;  // exactly 2: inside, outside
  WindowParams window;
};

struct KernelExpr {
  std::variant<BaseNode, SumNode, ProductNode, ChangepointNode, ChangewindowNode>
      node;

  bool is_base() const { return std::holds_alternative<BaseNode>(node); }
  bool is_sum() const { return std::holds_alternative<SumNode>(node); }
  bool is_product() const { return std::holds_alternative<ProductNode>(node); }
  bool is_changepoint() const {
    return std::holds_alternative<ChangepointNode>(node);
  }
  bool is_changewindow() const {
    return std::holds_alternative<ChangewindowNode>(node);
  }

  const BaseNode& as_base() const { return std::get<BaseNode>(node); }
  BaseNode& as_base() { return std::get<BaseNode>(node); }
};

// ---- construction helpers ----

inline KernelExpr base(BaseKind k, BaseParams p = {}) {
  return KernelExpr{BaseNode{k, p}};
}

inline KernelExpr wn(double variance = 1.0) {
  BaseParams p;
  p.variance = variance;
  return base(BaseKind::WN, p);
}

inline KernelExpr constant(double variance = 1.0) {
  BaseParams p;
  p.variance = variance;
  return base(BaseKind::C, p);
}

inline KernelExpr se(double variance = 1.0, double lengthscale = 1.0) {
  BaseParams p;
  p.variance = variance;
  p.lengthscale = lengthscale;
  return base(BaseKind::SE, p);
}

inline KernelExpr per(double variance = 1.0, double lengthscale = 1.0,
                      double period = 1.0) {
  BaseParams p;
  p.variance = variance;
  p.lengthscale = lengthscale;
  p.period = period;
  return base(BaseKind::PER, p);
}

inline KernelExpr cosine(double variance = 1.0, double period = 1.0) {
  BaseParams p;
  p.variance = variance;
  p.period = period;
  return base(BaseKind::COS, p);
}

inline KernelExpr lin(double variance = 1.0, double offset = 0.0) {
  BaseParams p;
  p.variance = variance;
  p.offset = offset;
  return base(BaseKind::LIN, p);
}

// A sum/product of one child is that child; empty lists are rejected.
inline KernelExpr sum(std::vector<KernelExpr> children) {
  if (children.empty()) throw std::invalid_argument("sum of zero kernels");
  if (children.size() == 1) return std::move(children.front());
  return KernelExpr{SumNode{std::move(children)}};
}

inline KernelExpr product(std::vector<KernelExpr> children) {
  if (children.empty()) throw std::invalid_argument("product of zero kernels");
  if (children.size() == 1) return std::move(children.front());
  return KernelExpr{ProductNode{std::move(children)}};
}

inline KernelExpr changepoint(KernelExpr before, KernelExpr after,
                              SigmoidParams sig) {
  return KernelExpr{
      ChangepointNode{{std::move(before), std::move(after)}, sig}};
}

inline KernelExpr changewindow(KernelExpr inside, KernelExpr outside,
                               WindowParams window) {
  return KernelExpr{
      ChangewindowNode{{std::move(inside), std::move(outside)}, window}};
}

inline KernelExpr operator+(KernelExpr a, KernelExpr b) {
  std::vector<KernelExpr> cs;
  cs.push_back(std::move(a));
  cs.push_back(std::move(b));
  return sum(std::move(cs));
}

inline KernelExpr operator*(KernelExpr a, KernelExpr b) {
  std::vector<KernelExpr> cs;
  cs.push_back(std::move(a));
  cs.push_back(std::move(b));
  return product(std::move(cs));
}

// ---- canonical ordering ----

// The parameter tuple of a base node in grammar order.
inline std::vector<double> base_param_tuple(const BaseNode& b) {
  switch (b.kind) {
    case BaseKind::WN:
    case BaseKind::C: return {b.params.variance};
    case BaseKind::SE: return {b.params.variance, b.params.lengthscale};
    case BaseKind::LIN: return {b.params.variance, b.params.offset};
    case BaseKind::PER:
      return {b.params.variance, b.params.lengthscale, b.params.period};
    case BaseKind::COS: return {b.params.variance, b.params.period};
  }
  return {};
}

inline int node_rank(const KernelExpr& e) {
  if (e.is_base()) return static_cast<int>(e.as_base().kind);
  if (e.is_sum()) return 6;
  if (e.is_product()) return 7;
  if (e.is_changepoint()) return 8;
  return 9;
}

inline int compare_kernels(const KernelExpr& a, const KernelExpr& b);

inline int compare_children(const std::vector<KernelExpr>& a,
                            const std::vector<KernelExpr>& b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    int c = compare_kernels(a[i], b[i]);
    if (c != 0) return c;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

inline int compare_doubles(std::span<const double> a,
                           std::span<const double> b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

// Total order on expressions: node rank first, then parameters/children
// lexicographically.  Used for deterministic printing and tie-breaking.
inline int compare_kernels(const KernelExpr& a, const KernelExpr& b) {
  int ra = node_rank(a), rb = node_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (a.is_base()) {
    auto ta = base_param_tuple(a.as_base());
    auto tb = base_param_tuple(b.as_base());
    return compare_doubles(ta, tb);
  }
  if (a.is_sum())
    return compare_children(std::get<SumNode>(a.node).children,
                            std::get<SumNode>(b.node).children);
  if (a.is_product())
    return compare_children(std::get<ProductNode>(a.node).children,
                            std::get<ProductNode>(b.node).children);
  if (a.is_changepoint()) {
    const auto& ca = std::get<ChangepointNode>(a.node);
    const auto& cb = std::get<ChangepointNode>(b.node);
    int c = compare_children(ca.children, cb.children);
    if (c != 0) return c;
    double pa[] = {ca.sig.location, ca.sig.steepness};
    double pb[] = {cb.sig.location, cb.sig.steepness};
    return compare_doubles(pa, pb);
  }
  const auto& ca = std::get<ChangewindowNode>(a.node);
  const auto& cb = std::get<ChangewindowNode>(b.node);
  int c = compare_children(ca.children, cb.children);
  if (c != 0) return c;
  double pa[] = {ca.window.location1, ca.window.location2,
                 ca.window.steepness};
  double pb[] = {cb.window.location1, cb.window.location2,
                 cb.window.steepness};
  return compare_doubles(pa, pb);
}

inline bool structurally_equal(const KernelExpr& a, const KernelExpr& b) {
  return compare_kernels(a, b) == 0;
}

// Flattens nested sums/products and sorts children into canonical order.
inline KernelExpr canonicalize(const KernelExpr& e) {
  if (e.is_base()) return e;
  if (e.is_sum() || e.is_product()) {
    bool is_sum = e.is_sum();
    const auto& children =
        is_sum ? std::get<SumNode>(e.node).children
               : std::get<ProductNode>(e.node).children;
    std::vector<KernelExpr> flat;
    for (const auto& c : children) {
      KernelExpr cc = canonicalize(c);
      if ((is_sum && cc.is_sum()) || (!is_sum && cc.is_product())) {
        auto& sub = is_sum ? std::get<SumNode>(cc.node).children
                           : std::get<ProductNode>(cc.node).children;
        for (auto& s : sub) flat.push_back(std::move(s));
      } else {
        flat.push_back(std::move(cc));
      }
    }
    std::sort(flat.begin(), flat.end(),
              [](const KernelExpr& a, const KernelExpr& b) {
                return compare_kernels(a, b) < 0;
              });
    return is_sum ? KernelExpr{SumNode{std::move(flat)}}
                  : KernelExpr{ProductNode{std::move(flat)}};
  }
  if (e.is_changepoint()) {
    const auto& cp = std::get<ChangepointNode>(e.node);
    return changepoint(canonicalize(cp.children[0]),
                       canonicalize(cp.children[1]), cp.sig);
  }
  const auto& cw = std::get<ChangewindowNode>(e.node);
  return changewindow(canonicalize(cw.children[0]),
                      canonicalize(cw.children[1]), cw.window);
}

// Number of free parameters: WN/C 1, SE/COS/LIN 2, PER 3, CP 2, CW 3.
inline int count_params(const KernelExpr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          return base_param_count(n.kind);
        } else if constexpr (std::is_same_v<T, SumNode> ||
                             std::is_same_v<T, ProductNode>) {
          int total = 0;
          for (const auto& c : n.children) total += count_params(c);
          return total;
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          return 2 + count_params(n.children[0]) + count_params(n.children[1]);
        } else {
          return 3 + count_params(n.children[0]) + count_params(n.children[1]);
        }
      },
      e.node);
}

// ---- parameter packing ----
//
// Positive parameters (variances, lengthscales, periods, steepnesses) are
// optimized in log space; offsets and changepoint locations stay as-is.
// Packing order is a preorder walk, node parameters before children.

enum class Transform { Log, Identity };

// What a packed parameter means, so initialization can be scale-aware.
enum class ParamField {
  Variance,
  Lengthscale,
  Offset,
  Period,
  Location,   // changepoint / window edges
  Steepness,
};

struct ParamSlot {
  double* value;
  Transform transform;
  ParamField field;
};

inline void collect_param_slots(KernelExpr& e, std::vector<ParamSlot>& out) {
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          out.push_back({&n.params.variance, Transform::Log, ParamField::Variance});
          switch (n.kind) {
            case BaseKind::SE:
              out.push_back({&n.params.lengthscale, Transform::Log,
                             ParamField::Lengthscale});
              break;
            case BaseKind::LIN:
              out.push_back(
                  {&n.params.offset, Transform::Identity, ParamField::Offset});
              break;
            case BaseKind::PER:
              out.push_back({&n.params.lengthscale, Transform::Log,
                             ParamField::Lengthscale});
              out.push_back(
                  {&n.params.period, Transform::Log, ParamField::Period});
              break;
            case BaseKind::COS:
              out.push_back(
                  {&n.params.period, Transform::Log, ParamField::Period});
              break;
            default: break;
          }
        } else if constexpr (std::is_same_v<T, SumNode> ||
                             std::is_same_v<T, ProductNode>) {
          for (auto& c : n.children) collect_param_slots(c, out);
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          out.push_back(
              {&n.sig.location, Transform::Identity, ParamField::Location});
          out.push_back(
              {&n.sig.steepness, Transform::Log, ParamField::Steepness});
          for (auto& c : n.children) collect_param_slots(c, out);
        } else {
          out.push_back({&n.window.location1, Transform::Identity,
                         ParamField::Location});
          out.push_back({&n.window.location2, Transform::Identity,
                         ParamField::Location});
          out.push_back(
              {&n.window.steepness, Transform::Log, ParamField::Steepness});
          for (auto& c : n.children) collect_param_slots(c, out);
        }
      },
      e.node);
}

inline std::vector<double> pack_params(const KernelExpr& e) {
  KernelExpr copy = e;
  std::vector<ParamSlot> slots;
  collect_param_slots(copy, slots);
  std::vector<double> out;
  out.reserve(slots.size());
  for (const auto& s : slots)
    out.push_back(s.transform == Transform::Log ? std::log(*s.value)
                                                : *s.value);
  return out;
}

inline void set_packed_params(KernelExpr& e, std::span<const double> packed) {
  std::vector<ParamSlot> slots;
  collect_param_slots(e, slots);
  assert(slots.size() == packed.size());
  for (size_t i = 0; i < slots.size(); ++i)
    *slots[i].value = slots[i].transform == Transform::Log
                          ? std::exp(packed[i])
                          : packed[i];
}

}  // namespace autostat
