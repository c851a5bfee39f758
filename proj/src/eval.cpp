#include "minmod/eval.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace minmod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Above this log-magnitude exp() overflows a double.
constexpr double kLogMax = 709.0;
// Results this small from nonzero operands are treated as lost to underflow.
constexpr double kTiny = 1e-290;

Complex unit(Complex c) {
  const double a = std::abs(c);
  return a > 0.0 ? c / a : Complex(1.0, 0.0);
}

bool finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

ScaledComplex invalid() {
  ScaledComplex s;
  s.log_mag = kInf;
  return s;
}

ScaledComplex s_mul(const ScaledComplex& a, const ScaledComplex& b) {
  if (!a.valid() || !b.valid()) return invalid();
  if (a.is_zero() || b.is_zero()) return ScaledComplex{};
  return {unit(a.phase * b.phase), a.log_mag + b.log_mag};
}

ScaledComplex s_div(const ScaledComplex& a, const ScaledComplex& b) {
  if (!a.valid() || !b.valid() || b.is_zero()) return invalid();
  if (a.is_zero()) return ScaledComplex{};
  return {unit(a.phase / b.phase), a.log_mag - b.log_mag};
}

ScaledComplex s_add(const ScaledComplex& a, const ScaledComplex& b) {
  if (!a.valid() || !b.valid()) return invalid();
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const ScaledComplex& big = a.log_mag >= b.log_mag ? a : b;
  const ScaledComplex& small = a.log_mag >= b.log_mag ? b : a;
  const Complex w = big.phase + small.phase * std::exp(small.log_mag - big.log_mag);
  const double mag = std::abs(w);
  if (mag == 0.0) return ScaledComplex{};
  return {w / mag, big.log_mag + std::log(mag)};
}

ScaledComplex s_neg(const ScaledComplex& a) { return {-a.phase, a.log_mag}; }

ScaledComplex s_pow(ScaledComplex base, unsigned n) {
  ScaledComplex acc = ScaledComplex::from(Complex(1.0, 0.0));
  while (n > 0) {
    if (n & 1u) acc = s_mul(acc, base);
    n >>= 1u;
    if (n > 0) base = s_mul(base, base);
  }
  return acc;
}

ScaledComplex s_exp(const ScaledComplex& a) {
  if (!a.valid()) return invalid();
  if (a.is_zero()) return ScaledComplex::from(Complex(1.0, 0.0));
  if (a.log_mag < kLogMax) {
    const Complex c = a.to_complex();
    return {std::polar(1.0, c.imag()), c.real()};
  }
  // |a| beyond double range: only the magnitude of exp(a) can be estimated,
  // and only when Re a itself stays finite.
  const double re = std::exp(a.log_mag) * a.phase.real();
  const double im_scaled = a.phase.imag();
  if (!std::isfinite(re)) return re > 0 ? invalid() : ScaledComplex{};
  const double im = std::isfinite(std::exp(a.log_mag) * im_scaled) ? std::exp(a.log_mag) * im_scaled : 0.0;
  return {std::polar(1.0, im), re};
}

ScaledComplex s_sqrt(const ScaledComplex& a) {
  if (!a.valid()) return invalid();
  if (a.is_zero()) return ScaledComplex{};
  return {std::sqrt(a.phase), 0.5 * a.log_mag};
}

ScaledComplex s_log(const ScaledComplex& a) {
  if (!a.valid() || a.is_zero()) return invalid();
  return ScaledComplex::from(Complex(a.log_mag, std::arg(a.phase)));
}

const ScaledComplex kI = ScaledComplex::from(Complex(0.0, 1.0));
const ScaledComplex kHalf = ScaledComplex::from(Complex(0.5, 0.0));

ScaledComplex s_call(Builtin fn, const ScaledComplex& a) {
  if (!a.valid()) return invalid();
  // Small arguments: the library functions are accurate and do not overflow.
  if (a.log_mag < kLogMax) {
    const Complex c = a.to_complex();
    const bool imag_small = std::abs(c.imag()) < kLogMax;
    const bool real_small = std::abs(c.real()) < kLogMax;
    switch (fn) {
      case Builtin::Sin:
        if (imag_small) return ScaledComplex::from(std::sin(c));
        break;
      case Builtin::Cos:
        if (imag_small) return ScaledComplex::from(std::cos(c));
        break;
      case Builtin::Sinh:
        if (real_small) return ScaledComplex::from(std::sinh(c));
        break;
      case Builtin::Cosh:
        if (real_small) return ScaledComplex::from(std::cosh(c));
        break;
      default: break;
    }
  }
  switch (fn) {
    case Builtin::Exp: return s_exp(a);
    case Builtin::Sqrt: return s_sqrt(a);
    case Builtin::Log: return s_log(a);
    case Builtin::Sin: {
      // (e^{ia} - e^{-ia}) / (2i)
      const ScaledComplex ia = s_mul(kI, a);
      const ScaledComplex d = s_add(s_exp(ia), s_neg(s_exp(s_neg(ia))));
      return s_div(s_mul(d, kHalf), kI);
    }
    case Builtin::Cos: {
      const ScaledComplex ia = s_mul(kI, a);
      return s_mul(s_add(s_exp(ia), s_exp(s_neg(ia))), kHalf);
    }
    case Builtin::Sinh:
      return s_mul(s_add(s_exp(a), s_neg(s_exp(s_neg(a)))), kHalf);
    case Builtin::Cosh:
      return s_mul(s_add(s_exp(a), s_exp(s_neg(a))), kHalf);
  }
  return invalid();
}

Complex plain_call(Builtin fn, Complex a) {
  switch (fn) {
    case Builtin::Exp: return std::exp(a);
    case Builtin::Sin: return std::sin(a);
    case Builtin::Cos: return std::cos(a);
    case Builtin::Sinh: return std::sinh(a);
    case Builtin::Cosh: return std::cosh(a);
    case Builtin::Sqrt: return std::sqrt(a);
    case Builtin::Log: return std::log(a);
  }
  return {};
}

}  // namespace

ScaledComplex ScaledComplex::from(Complex c) {
  const double a = std::abs(c);
  if (a == 0.0) return ScaledComplex{};
  if (!std::isfinite(a)) return invalid();
  return {c / a, std::log(a)};
}

Complex ScaledComplex::to_complex() const {
  if (is_zero()) return {};
  return phase * std::exp(log_mag);
}

// ---------------------------------------------------------------------------

EvalResult EvalResult::finite(Complex value) { return EvalResult(value); }
EvalResult EvalResult::overflow(double log_abs, bool valid) { return EvalResult(Overflow{log_abs, valid}); }

Complex EvalResult::value() const {
  if (const auto* v = std::get_if<Complex>(&data_)) return *v;
  throw std::logic_error("EvalResult holds the overflow variant");
}

double EvalResult::log_abs() const {
  if (const auto* v = std::get_if<Complex>(&data_)) return std::log(std::abs(*v));
  return std::get<Overflow>(data_).log_abs;
}

bool EvalResult::log_valid() const {
  if (std::holds_alternative<Complex>(data_)) return true;
  return std::get<Overflow>(data_).valid;
}

// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e) {
  emit(e.root());
  std::size_t depth = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const:
      case Op::Var:
      case Op::Series: ++depth; break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: --depth; break;
      default: break;
    }
    depth_ = std::max(depth_, depth);
  }
}

void CompiledExpr::emit(const Node& n) {
  switch (n.kind) {
    case NodeKind::Number: code_.push_back({Op::Const, Builtin::Exp, 0, n.number}); return;
    case NodeKind::ImagUnit: code_.push_back({Op::Const, Builtin::Exp, 0, Complex(0.0, 1.0)}); return;
    case NodeKind::Pi: code_.push_back({Op::Const, Builtin::Exp, 0, Complex(std::numbers::pi, 0.0)}); return;
    case NodeKind::Euler: code_.push_back({Op::Const, Builtin::Exp, 0, Complex(std::numbers::e, 0.0)}); return;
    case NodeKind::Var: code_.push_back({Op::Var}); return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      emit(*n.lhs);
      emit(*n.rhs);
      const Op op = n.kind == NodeKind::Add   ? Op::Add
                    : n.kind == NodeKind::Sub ? Op::Sub
                    : n.kind == NodeKind::Mul ? Op::Mul
                                              : Op::Div;
      code_.push_back({op});
      return;
    }
    case NodeKind::Neg:
      emit(*n.lhs);
      code_.push_back({Op::Neg});
      return;
    case NodeKind::Pow:
      emit(*n.lhs);
      code_.push_back({Op::Pow, Builtin::Exp, n.exponent});
      return;
    case NodeKind::Call:
      emit(*n.lhs);
      code_.push_back({Op::Call, n.fn});
      return;
    case NodeKind::Coeffs:
      series_.push_back(n.series->coeffs);
      code_.push_back({Op::Series, Builtin::Exp, static_cast<unsigned>(series_.size() - 1)});
      return;
  }
}

Complex horner(const std::vector<Complex>& coeffs, Complex z) {
  Complex b = coeffs.back();
  for (std::size_t k = coeffs.size() - 1; k-- > 0;) b = b * z + coeffs[k];
  return b;
}

namespace {

template <typename T>
class Stack {
 public:
  explicit Stack(std::size_t depth) {
    if (depth > inline_.size()) heap_.resize(depth);
    data_ = depth > inline_.size() ? heap_.data() : inline_.data();
  }
  void push(const T& v) { data_[size_++] = v; }
  T pop() { return data_[--size_]; }
  T& top() { return data_[size_ - 1]; }

 private:
  std::array<T, 32> inline_{};
  std::vector<T> heap_;
  T* data_ = nullptr;
  std::size_t size_ = 0;
};

bool lost(Complex result, Complex a, Complex b) {
  const double m = std::abs(result);
  return m < kTiny && a != Complex{} && b != Complex{};
}

}  // namespace

bool CompiledExpr::try_plain(Complex z, Complex& out) const {
  Stack<Complex> st(depth_);
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st.push(in.value); break;
      case Op::Var: st.push(z); break;
      case Op::Add: {
        const Complex b = st.pop();
        st.top() += b;
        break;
      }
      case Op::Sub: {
        const Complex b = st.pop();
        st.top() -= b;
        break;
      }
      case Op::Mul: {
        const Complex b = st.pop();
        const Complex a = st.top();
        const Complex r = a * b;
        if (lost(r, a, b)) return false;
        st.top() = r;
        break;
      }
      case Op::Div: {
        const Complex b = st.pop();
        const Complex a = st.top();
        if (b == Complex{}) return false;
        const Complex r = a / b;
        if (lost(r, a, b)) return false;
        st.top() = r;
        break;
      }
      case Op::Neg: st.top() = -st.top(); break;
      case Op::Pow: {
        const Complex a = st.top();
        Complex acc(1.0, 0.0), base = a;
        for (unsigned n = in.arg; n > 0; n >>= 1u) {
          if (n & 1u) acc *= base;
          if (n > 1) base *= base;
        }
        if (in.arg > 0 && lost(acc, a, a)) return false;
        st.top() = acc;
        break;
      }
      case Op::Call: {
        const Complex a = st.top();
        if (in.fn == Builtin::Exp && a.real() < -700.0) return false;
        if (in.fn == Builtin::Log && a == Complex{}) return false;
        st.top() = plain_call(in.fn, a);
        break;
      }
      case Op::Series: st.push(horner(series_[in.arg], z)); break;
    }
    if (!finite(st.top())) return false;
  }
  out = st.top();
  // components can be finite while the modulus is not
  return std::isfinite(std::abs(out));
}

ScaledComplex CompiledExpr::eval_scaled(Complex z) const {
  Stack<ScaledComplex> st(depth_);
  const ScaledComplex sz = ScaledComplex::from(z);
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st.push(ScaledComplex::from(in.value)); break;
      case Op::Var: st.push(sz); break;
      case Op::Add: {
        const ScaledComplex b = st.pop();
        st.top() = s_add(st.top(), b);
        break;
      }
      case Op::Sub: {
        const ScaledComplex b = st.pop();
        st.top() = s_add(st.top(), s_neg(b));
        break;
      }
      case Op::Mul: {
        const ScaledComplex b = st.pop();
        st.top() = s_mul(st.top(), b);
        break;
      }
      case Op::Div: {
        const ScaledComplex b = st.pop();
        st.top() = s_div(st.top(), b);
        break;
      }
      case Op::Neg: st.top() = s_neg(st.top()); break;
      case Op::Pow: st.top() = s_pow(st.top(), in.arg); break;
      case Op::Call: st.top() = s_call(in.fn, st.top()); break;
      case Op::Series: {
        const auto& c = series_[in.arg];
        ScaledComplex b = ScaledComplex::from(c.back());
        for (std::size_t k = c.size() - 1; k-- > 0;) b = s_add(s_mul(b, sz), ScaledComplex::from(c[k]));
        st.push(b);
        break;
      }
    }
  }
  return st.top();
}

EvalResult CompiledExpr::operator()(Complex z) const {
  Complex v;
  if (try_plain(z, v)) return EvalResult::finite(v);
  const ScaledComplex s = eval_scaled(z);
  if (!s.valid()) return EvalResult::overflow(s.log_mag, false);
  if (s.log_mag < kLogMax) return EvalResult::finite(s.to_complex());
  return EvalResult::overflow(s.log_mag, true);
}

double CompiledExpr::log_abs(Complex z) const {
  Complex v;
  if (try_plain(z, v)) return std::log(std::abs(v));
  return eval_scaled(z).log_mag;
}

EvalResult evaluate(const Expr& f, Complex z) { return CompiledExpr(f)(z); }

}  // namespace minmod
