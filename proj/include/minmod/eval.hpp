// Evaluation of expression trees, with an overflow-safe fallback that keeps
// track of log-magnitudes when intermediate values leave double range.
#pragma once

#include <complex>
#include <limits>
#include <variant>
#include <vector>

#include "minmod/expr.hpp"

namespace minmod {

/// Complex value stored as phase * exp(log_mag) with |phase| == 1.
/// Zero is log_mag == -inf. A log_mag of +inf or NaN marks a value whose
/// magnitude is not representable even in log form.
struct ScaledComplex {
  Complex phase{1.0, 0.0};
  double log_mag = -std::numeric_limits<double>::infinity();

  static ScaledComplex from(Complex c);
  bool is_zero() const { return log_mag == -std::numeric_limits<double>::infinity(); }
  bool valid() const { return log_mag == log_mag && log_mag != std::numeric_limits<double>::infinity(); }
  /// The value as a plain complex number; may overflow to inf or underflow to 0.
  Complex to_complex() const;
};

class EvalResult {
 public:
  static EvalResult finite(Complex value);
  static EvalResult overflow(double log_abs, bool valid);

  bool is_finite() const { return std::holds_alternative<Complex>(data_); }
  /// Throws std::logic_error on the overflow variant.
  Complex value() const;
  /// ln|f(z)|; for the finite variant this is computed from value().
  double log_abs() const;
  /// False when the overflow variant could not even estimate ln|f(z)|.
  bool log_valid() const;

 private:
  struct Overflow {
    double log_abs;
    bool valid;
  };
  explicit EvalResult(Complex v) : data_(v) {}
  explicit EvalResult(Overflow o) : data_(o) {}
  std::variant<Complex, Overflow> data_;
};

/// An expression flattened into a stack program. Immutable after
/// construction and safe to share between threads.
class CompiledExpr {
 public:
  explicit CompiledExpr(const Expr& e);

  EvalResult operator()(Complex z) const;
  /// Plain double evaluation. Returns false if any intermediate overflowed,
  /// produced NaN, or underflowed from nonzero operands.
  bool try_plain(Complex z, Complex& out) const;
  /// Overflow-safe evaluation.
  ScaledComplex eval_scaled(Complex z) const;
  /// ln|f(z)| via the plain path when possible, else the scaled path.
  double log_abs(Complex z) const;

 private:
  enum class Op : unsigned char { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Call, Series };
  struct Instr {
    Op op;
    Builtin fn = Builtin::Exp;
    unsigned arg = 0;  // exponent for Pow, series index for Series
    Complex value{};
  };
  void emit(const Node& n);

  std::vector<Instr> code_;
  std::vector<std::vector<Complex>> series_;
  std::size_t depth_ = 0;
};

/// One-shot evaluation; compiles the tree on every call.
EvalResult evaluate(const Expr& f, Complex z);

/// Horner evaluation of sum_k coeffs[k] z^k in plain double arithmetic.
Complex horner(const std::vector<Complex>& coeffs, Complex z);

}  // namespace minmod
