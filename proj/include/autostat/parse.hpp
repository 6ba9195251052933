#pragma once

// Text form of kernel expressions.
//
//   expr := term ('+' term)*
//   term := atom ('*' atom)*
//   atom := NAME '(' num (',' num)* ')'
//         | 'CP(' expr ',' expr ';' loc ',' steep ')'
//         | 'CW(' expr ',' expr ';' l1 ',' l2 ',' steep ')'
//         | '(' expr ')'
//
// Numbers are decimal literals (scientific notation allowed).  Printing is
// deterministic: sum/product children appear in canonical order and numbers
// use the shortest round-tripping representation.

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "autostat/kernel.hpp"

namespace autostat {

struct parse_error : std::runtime_error {
  size_t position;
  parse_error(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)),
        position(pos) {}
};

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

class KernelParser {
 public:
  explicit KernelParser(std::string_view text) : text_(text) {}

  KernelExpr parse() {
    KernelExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool try_eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!try_eat(c)) fail(std::string("expected '") + c + "'");
  }

  double number() {
    skip_ws();
    double v = 0;
    auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (res.ec != std::errc{}) fail("expected a number");
    pos_ = static_cast<size_t>(res.ptr - text_.data());
    return v;
  }

  double positive(const char* what) {
    size_t at = pos_;
    double v = number();
    if (!(v > 0) || !std::isfinite(v))
      throw parse_error(std::string(what) + " must be positive", at);
    return v;
  }

  std::string name() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == start) fail("expected a kernel name");
    return std::string(text_.substr(start, pos_ - start));
  }

  KernelExpr expr() {
    std::vector<KernelExpr> terms;
    terms.push_back(term());
    while (try_eat('+')) terms.push_back(term());
    return sum(std::move(terms));
  }

  KernelExpr term() {
    std::vector<KernelExpr> factors;
    factors.push_back(atom());
    while (try_eat('*')) factors.push_back(atom());
    return product(std::move(factors));
  }

  KernelExpr atom() {
    skip_ws();
    if (try_eat('(')) {
      KernelExpr e = expr();
      expect(')');
      return e;
    }
    size_t name_at = pos_;
    std::string id = name();
    if (id == "CP") return changepoint_atom();
    if (id == "CW") return changewindow_atom();
    BaseKind kind;
    if (id == "WN") kind = BaseKind::WN;
    else if (id == "C") kind = BaseKind::C;
    else if (id == "SE") kind = BaseKind::SE;
    else if (id == "PER") kind = BaseKind::PER;
    else if (id == "COS") kind = BaseKind::COS;
    else if (id == "LIN") kind = BaseKind::LIN;
    else throw parse_error("unknown kernel name '" + id + "'", name_at);

    expect('(');
    std::vector<double> args;
    args.push_back(number());
    while (try_eat(',')) args.push_back(number());
    expect(')');
    int want = base_param_count(kind);
    if (static_cast<int>(args.size()) != want)
      throw parse_error(std::string(base_name(kind)) + " requires " +
                            std::to_string(want) + " parameters",
                        name_at);
    return make_base(kind, args, name_at);
  }

  KernelExpr make_base(BaseKind kind, const std::vector<double>& args, size_t at) {
    BaseParams p;
    auto check_pos = [&](double v, const char* what) {
      if (!(v > 0) || !std::isfinite(v))
        throw parse_error(std::string(base_name(kind)) + ": " + what +
                              " must be positive",
                          at);
      return v;
    };
    p.variance = check_pos(args[0], "variance");
    switch (kind) {
      case BaseKind::SE: p.lengthscale = check_pos(args[1], "lengthscale"); break;
      case BaseKind::LIN:
        if (!std::isfinite(args[1])) throw parse_error("LIN offset must be finite", at);
        p.offset = args[1];
        break;
      case BaseKind::PER:
        p.lengthscale = check_pos(args[1], "lengthscale");
        p.period = check_pos(args[2], "period");
        break;
      case BaseKind::COS: p.period = check_pos(args[1], "period"); break;
      default: break;
    }
    return base(kind, p);
  }

  KernelExpr changepoint_atom() {
    expect('(');
    KernelExpr left = expr();
    expect(',');
    KernelExpr right = expr();
    expect(';');
    SigmoidParams sig;
    sig.location = number();
    expect(',');
    sig.steepness = positive("CP steepness");
    expect(')');
    return changepoint(std::move(left), std::move(right), sig);
  }

  KernelExpr changewindow_atom() {
    expect('(');
    KernelExpr left = expr();
    expect(',');
    KernelExpr right = expr();
    expect(';');
    WindowParams win;
    size_t at = pos_;
    win.location1 = number();
    expect(',');
    win.location2 = number();
    expect(',');
    win.steepness = positive("CW steepness");
    expect(')');
    if (!(win.location1 < win.location2))
      throw parse_error("CW window locations must satisfy l1 < l2", at);
    return changewindow(std::move(left), std::move(right), win);
  }
};

inline void print_into(const KernelExpr& e, std::string& out, bool with_params) {
  auto print_args = [&](std::initializer_list<double> args) {
    if (!with_params) return;
    out += '(';
    bool first = true;
    for (double a : args) {
      if (!first) out += ',';
      out += format_double(a);
      first = false;
    }
    out += ')';
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BaseNode>) {
          out += base_name(n.kind);
          switch (n.kind) {
            case BaseKind::WN:
            case BaseKind::C: print_args({n.params.variance}); break;
            case BaseKind::SE:
              print_args({n.params.variance, n.params.lengthscale});
              break;
            case BaseKind::LIN:
              print_args({n.params.variance, n.params.offset});
              break;
            case BaseKind::PER:
              print_args(
                  {n.params.variance, n.params.lengthscale, n.params.period});
              break;
            case BaseKind::COS:
              print_args({n.params.variance, n.params.period});
              break;
          }
        } else if constexpr (std::is_same_v<T, SumNode>) {
          bool first = true;
          for (const auto& c : n.children) {
            if (!first) out += " + ";
            print_into(c, out, with_params);
            first = false;
          }
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          bool first = true;
          for (const auto& c : n.children) {
            if (!first) out += " * ";
            bool paren = c.is_sum();
            if (paren) out += '(';
            print_into(c, out, with_params);
            if (paren) out += ')';
            first = false;
          }
        } else if constexpr (std::is_same_v<T, ChangepointNode>) {
          out += "CP(";
          print_into(n.children[0], out, with_params);
          out += ", ";
          print_into(n.children[1], out, with_params);
          if (with_params) {
            out += "; ";
            out += format_double(n.sig.location);
            out += ", ";
            out += format_double(n.sig.steepness);
          }
          out += ')';
        } else {
          out += "CW(";
          print_into(n.children[0], out, with_params);
          out += ", ";
          print_into(n.children[1], out, with_params);
          if (with_params) {
            out += "; ";
            out += format_double(n.window.location1);
            out += ", ";
            out += format_double(n.window.location2);
            out += ", ";
            out += format_double(n.window.steepness);
          }
          out += ')';
        }
      },
      e.node);
}

}  // namespace detail

inline KernelExpr parse_kernel(std::string_view text) {
  return detail::KernelParser(text).parse();
}

inline std::string print_kernel(const KernelExpr& e) {
  std::string out;
  detail::print_into(canonicalize(e), out, true);
  return out;
}

// Canonical print with parameters stripped; used to deduplicate search
// candidates that differ only in parameter values.
inline std::string structure_key(const KernelExpr& e) {
  std::string out;
  detail::print_into(canonicalize(e), out, false);
  return out;
}

}  // namespace autostat
