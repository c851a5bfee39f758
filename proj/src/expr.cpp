#include "minmod/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "minmod/eval.hpp"

namespace minmod {

namespace {

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_number(const Expr& e) { return e.root().kind == NodeKind::Number; }
bool is_value(const Expr& e, double v) { return is_number(e) && e.root().number == Complex(v, 0.0); }

}  // namespace

std::string_view builtin_name(Builtin fn) {
  switch (fn) {
    case Builtin::Exp: return "exp";
    case Builtin::Sin: return "sin";
    case Builtin::Cos: return "cos";
    case Builtin::Sinh: return "sinh";
    case Builtin::Cosh: return "cosh";
    case Builtin::Sqrt: return "sqrt";
    case Builtin::Log: return "log";
  }
  return "?";
}

std::optional<Builtin> builtin_from_name(std::string_view name) {
  for (Builtin fn : {Builtin::Exp, Builtin::Sin, Builtin::Cos, Builtin::Sinh, Builtin::Cosh,
                     Builtin::Sqrt, Builtin::Log}) {
    if (builtin_name(fn) == name) return fn;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Construction

Expr::Expr() : root_(make(Node{})) {}
Expr::Expr(NodePtr root) : root_(std::move(root)) {}

Expr Expr::number(Complex value) {
  Node n;
  n.kind = NodeKind::Number;
  n.number = value;
  return Expr(make(std::move(n)));
}

namespace {
Expr leaf(NodeKind kind) {
  Node n;
  n.kind = kind;
  return Expr(make(std::move(n)));
}
}  // namespace

Expr Expr::imag_unit() { return leaf(NodeKind::ImagUnit); }
Expr Expr::pi() { return leaf(NodeKind::Pi); }
Expr Expr::euler() { return leaf(NodeKind::Euler); }
Expr Expr::var() { return leaf(NodeKind::Var); }

namespace {
Expr binary(NodeKind kind, Expr a, Expr b) {
  Node n;
  n.kind = kind;
  n.lhs = a.ptr();
  n.rhs = b.ptr();
  return Expr(make(std::move(n)));
}
}  // namespace

Expr Expr::add(Expr a, Expr b) { return binary(NodeKind::Add, std::move(a), std::move(b)); }
Expr Expr::sub(Expr a, Expr b) { return binary(NodeKind::Sub, std::move(a), std::move(b)); }
Expr Expr::mul(Expr a, Expr b) { return binary(NodeKind::Mul, std::move(a), std::move(b)); }
Expr Expr::div(Expr a, Expr b) { return binary(NodeKind::Div, std::move(a), std::move(b)); }

Expr Expr::neg(Expr a) {
  Node n;
  n.kind = NodeKind::Neg;
  n.lhs = a.ptr();
  return Expr(make(std::move(n)));
}

Expr Expr::pow(Expr base, unsigned exponent) {
  Node n;
  n.kind = NodeKind::Pow;
  n.lhs = base.ptr();
  n.exponent = exponent;
  return Expr(make(std::move(n)));
}

Expr Expr::call(Builtin fn, Expr arg) {
  Node n;
  n.kind = NodeKind::Call;
  n.fn = fn;
  n.lhs = arg.ptr();
  return Expr(make(std::move(n)));
}

Expr Expr::series(CoefficientList list) {
  if (list.coeffs.empty()) throw std::invalid_argument("coefficient list is empty");
  const bool any_nonzero = std::any_of(list.coeffs.begin(), list.coeffs.end(),
                                       [](Complex c) { return c != Complex{}; });
  if (!any_nonzero) throw std::invalid_argument("coefficient list has no nonzero coefficient");
  for (Complex c : list.coeffs) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw std::invalid_argument("coefficient list has a non-finite coefficient");
  }
  Node n;
  n.kind = NodeKind::Coeffs;
  n.series = std::make_shared<const CoefficientList>(std::move(list));
  return Expr(make(std::move(n)));
}

// ---------------------------------------------------------------------------
// Parsing

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, ParseErrorKind kind = ParseErrorKind::Syntax) {
    throw ParseError(kind, pos_, msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::add(lhs, term());
      } else if (accept('-')) {
        lhs = Expr::sub(lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::mul(lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::div(lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    if (accept('-')) return Expr::neg(factor());
    Expr b = base();
    if (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      std::size_t end = start;
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
      const bool more_number = end < text_.size() && (text_[end] == '.' || text_[end] == 'e' ||
                                                       text_[end] == 'E');
      if (end == start || more_number) {
        fail("exponent must be a non-negative integer literal", ParseErrorKind::NonIntegerExponent);
      }
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
      if (ec != std::errc{} || ptr != text_.data() + end || value > 1000000u) {
        fail("exponent out of range", ParseErrorKind::NonIntegerExponent);
      }
      pos_ = end;
      return Expr::pow(b, value);
    }
    return b;
  }

  Expr base() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (c == '\0') fail("unexpected end of input");
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    auto digits = [&] {
      const std::size_t s = p;
      while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
      return p - s;
    };
    std::size_t n = digits();
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      n += digits();
    }
    if (n == 0) fail("malformed number");
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        p = q;
        digits();
      }
    }
    const std::string token(text_.substr(start, p - start));
    char* endp = nullptr;
    const double v = std::strtod(token.c_str(), &endp);
    if (endp != token.c_str() + token.size() || !std::isfinite(v)) fail("malformed number");
    pos_ = p;
    return Expr::number(Complex(v, 0.0));
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "z") return Expr::var();
    if (name == "i") return Expr::imag_unit();
    if (name == "pi") return Expr::pi();
    if (name == "e") return Expr::euler();
    if (auto fn = builtin_from_name(name)) {
      if (!accept('(')) fail("expected '(' after " + std::string(name));
      Expr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return Expr::call(*fn, arg);
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'", ParseErrorKind::UnknownIdentifier);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_real(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Binding strength of the printed form: sums 1, products 2, negation 3,
// powers 4, atoms 5.
int strength(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Number:
      if (n.number.imag() != 0.0 || n.number.real() < 0.0 || std::signbit(n.number.real())) return 0;
      return 5;
    default: return 5;
  }
}

void print_node(const Node& n, std::string& out);

void print_wrapped(const Node& n, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print_node(n, out);
  if (wrap) out += ')';
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number:
      if (n.number.imag() == 0.0) {
        out += format_real(n.number.real());
      } else {
        out += format_real(n.number.real());
        out += n.number.imag() < 0 ? " - " : " + ";
        out += format_real(std::abs(n.number.imag()));
        out += "*i";
      }
      return;
    case NodeKind::ImagUnit: out += 'i'; return;
    case NodeKind::Pi: out += "pi"; return;
    case NodeKind::Euler: out += 'e'; return;
    case NodeKind::Var: out += 'z'; return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const int s = strength(n);
      print_wrapped(*n.lhs, strength(*n.lhs) < s, out);
      switch (n.kind) {
        case NodeKind::Add: out += " + "; break;
        case NodeKind::Sub: out += " - "; break;
        case NodeKind::Mul: out += '*'; break;
        default: out += '/'; break;
      }
      print_wrapped(*n.rhs, strength(*n.rhs) <= s, out);
      return;
    }
    case NodeKind::Neg:
      out += '-';
      print_wrapped(*n.lhs, strength(*n.lhs) < 3, out);
      return;
    case NodeKind::Pow:
      print_wrapped(*n.lhs, strength(*n.lhs) < 5, out);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case NodeKind::Call:
      out += builtin_name(n.fn);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Coeffs:
      out += "poly[" + std::to_string(n.series->coeffs.size()) + "]";
      return;
  }
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_node(e.root(), out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  const Node& x = a.root();
  const Node& y = b.root();
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::Number: return x.number == y.number;
    case NodeKind::ImagUnit:
    case NodeKind::Pi:
    case NodeKind::Euler:
    case NodeKind::Var: return true;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return structurally_equal(Expr(x.lhs), Expr(y.lhs)) && structurally_equal(Expr(x.rhs), Expr(y.rhs));
    case NodeKind::Neg: return structurally_equal(Expr(x.lhs), Expr(y.lhs));
    case NodeKind::Pow: return x.exponent == y.exponent && structurally_equal(Expr(x.lhs), Expr(y.lhs));
    case NodeKind::Call: return x.fn == y.fn && structurally_equal(Expr(x.lhs), Expr(y.lhs));
    case NodeKind::Coeffs:
      return x.series->coeffs == y.series->coeffs && x.series->tail_bound == y.series->tail_bound;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Differentiation with constant folding

namespace {

Expr fold_add(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0)) return b;
  if (is_value(b, 0.0)) return a;
  if (is_number(a) && is_number(b)) return Expr::number(a.root().number + b.root().number);
  return Expr::add(a, b);
}

Expr fold_sub(const Expr& a, const Expr& b) {
  if (is_value(b, 0.0)) return a;
  if (is_number(a) && is_number(b)) return Expr::number(a.root().number - b.root().number);
  if (is_value(a, 0.0)) return is_number(b) ? Expr::number(-b.root().number) : Expr::neg(b);
  return Expr::sub(a, b);
}

Expr fold_neg(const Expr& a) {
  if (is_number(a)) return Expr::number(-a.root().number);
  return Expr::neg(a);
}

Expr fold_mul(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0) || is_value(b, 0.0)) return Expr::number(0.0);
  if (is_value(a, 1.0)) return b;
  if (is_value(b, 1.0)) return a;
  if (is_number(a) && is_number(b)) return Expr::number(a.root().number * b.root().number);
  return Expr::mul(a, b);
}

Expr fold_div(const Expr& a, const Expr& b) {
  if (is_value(a, 0.0)) return Expr::number(0.0);
  if (is_value(b, 1.0)) return a;
  if (is_number(a) && is_number(b) && b.root().number != Complex{})
    return Expr::number(a.root().number / b.root().number);
  return Expr::div(a, b);
}

Expr fold_pow(const Expr& a, unsigned n) {
  if (n == 0) return Expr::number(1.0);
  if (n == 1) return a;
  if (is_number(a)) return Expr::number(std::pow(a.root().number, static_cast<int>(n)));
  return Expr::pow(a, n);
}

}  // namespace

Expr derivative(const Expr& e) {
  const Node& n = e.root();
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::ImagUnit:
    case NodeKind::Pi:
    case NodeKind::Euler: return Expr::number(0.0);
    case NodeKind::Var: return Expr::number(1.0);
    case NodeKind::Add: return fold_add(derivative(Expr(n.lhs)), derivative(Expr(n.rhs)));
    case NodeKind::Sub: return fold_sub(derivative(Expr(n.lhs)), derivative(Expr(n.rhs)));
    case NodeKind::Neg: return fold_neg(derivative(Expr(n.lhs)));
    case NodeKind::Mul: {
      const Expr a(n.lhs), b(n.rhs);
      return fold_add(fold_mul(derivative(a), b), fold_mul(a, derivative(b)));
    }
    case NodeKind::Div: {
      const Expr a(n.lhs), b(n.rhs);
      return fold_div(fold_sub(fold_mul(derivative(a), b), fold_mul(a, derivative(b))), fold_pow(b, 2));
    }
    case NodeKind::Pow: {
      const Expr u(n.lhs);
      if (n.exponent == 0) return Expr::number(0.0);
      return fold_mul(fold_mul(Expr::number(static_cast<double>(n.exponent)), fold_pow(u, n.exponent - 1)),
                      derivative(u));
    }
    case NodeKind::Call: {
      const Expr u(n.lhs);
      const Expr du = derivative(u);
      Expr outer;
      switch (n.fn) {
        case Builtin::Exp: outer = e; break;
        case Builtin::Sin: outer = Expr::call(Builtin::Cos, u); break;
        case Builtin::Cos: outer = fold_neg(Expr::call(Builtin::Sin, u)); break;
        case Builtin::Sinh: outer = Expr::call(Builtin::Cosh, u); break;
        case Builtin::Cosh: outer = Expr::call(Builtin::Sinh, u); break;
        case Builtin::Sqrt:
          return fold_div(du, fold_mul(Expr::number(2.0), e));
        case Builtin::Log:
          return fold_div(du, u);
      }
      return fold_mul(outer, du);
    }
    case NodeKind::Coeffs: {
      const auto& c = n.series->coeffs;
      CoefficientList d;
      for (std::size_t k = 1; k < c.size(); ++k) d.coeffs.push_back(static_cast<double>(k) * c[k]);
      const bool any = std::any_of(d.coeffs.begin(), d.coeffs.end(), [](Complex v) { return v != Complex{}; });
      if (!any) return Expr::number(0.0);
      return Expr::series(std::move(d));
    }
  }
  return Expr::number(0.0);
}

// ---------------------------------------------------------------------------
// Coefficient-list sources

Expr parse_coefficient_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  CoefficientList list;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (!header) {
      if (first.rfind("poly:", 0) != 0) throw std::invalid_argument("coefficient file must start with 'poly:'");
      header = true;
      std::string rest = first.substr(5);
      if (rest.empty()) ls >> rest;
      if (rest.rfind("tail=", 0) == 0) list.tail_bound = std::stod(rest.substr(5));
      continue;
    }
    double re = 0, im = 0;
    std::istringstream row(line);
    if (!(row >> re >> im)) {
      throw std::invalid_argument("coefficient file line " + std::to_string(lineno) + ": expected 're im'");
    }
    list.coeffs.emplace_back(re, im);
  }
  if (!header) throw std::invalid_argument("coefficient file must start with 'poly:'");
  return Expr::series(std::move(list));
}

Expr load_coefficient_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficient file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_coefficient_text(ss.str());
}

// ---------------------------------------------------------------------------
// Taylor coefficients by discrete Cauchy integral

namespace {

std::vector<Complex> dft_coefficients(const CompiledExpr& f, std::size_t count, double radius,
                                      std::size_t samples, double& max_abs) {
  std::vector<Complex> values(samples);
  max_abs = 0.0;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    const Complex z = std::polar(radius, step * static_cast<double>(j));
    Complex v;
    if (!f.try_plain(z, v)) {
      const EvalResult r = f(z);
      if (!r.is_finite()) throw std::overflow_error("function overflows on the sampling circle");
      v = r.value();
    }
    values[j] = v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  std::vector<Complex> out(count);
  const double log_r = std::log(radius);
  for (std::size_t k = 0; k < count; ++k) {
    Complex acc{};
    for (std::size_t j = 0; j < samples; ++j) {
      // index reduction keeps the twiddle angle small and exact
      const std::size_t idx = (k * j) % samples;
      acc += values[j] * std::polar(1.0, -step * static_cast<double>(idx));
    }
    out[k] = acc / static_cast<double>(samples) * std::exp(-static_cast<double>(k) * log_r);
  }
  return out;
}

}  // namespace

TaylorResult taylor_coefficients(const Expr& f, std::size_t count, double radius) {
  if (count == 0) throw std::invalid_argument("count must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
  std::size_t samples = 64;
  while (samples < 4 * count) samples *= 2;

  const CompiledExpr compiled(f);
  double max_coarse = 0.0, max_fine = 0.0;
  const auto coarse = dft_coefficients(compiled, count, radius, samples, max_coarse);
  const auto fine = dft_coefficients(compiled, count, radius, 2 * samples, max_fine);

  TaylorResult res;
  res.coeffs = fine;
  res.samples = 2 * samples;
  res.radius = radius;
  res.max_abs_on_circle = max_fine;
  res.error_bound.resize(count);
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < count; ++k) {
    const double scale = std::exp(-static_cast<double>(k) * std::log(radius));
    const double roundoff = 8.0 * eps * max_fine * scale * std::log2(static_cast<double>(res.samples));
    res.error_bound[k] = std::abs(coarse[k] - fine[k]) + roundoff;
  }
  return res;
}

}  // namespace minmod
