// Expression trees for entire functions of one complex variable.
//
// An expression is an immutable tree shared through `std::shared_ptr<const
// Node>`; copies of `Expr` are cheap and safe to use from several threads.
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace minmod {

using Complex = std::complex<double>;

enum class Builtin { Exp, Sin, Cos, Sinh, Cosh, Sqrt, Log };

std::string_view builtin_name(Builtin fn);
std::optional<Builtin> builtin_from_name(std::string_view name);

enum class NodeKind {
  Number,    // numeric literal (real when produced by the parser)
  ImagUnit,  // i
  Pi,        // pi
  Euler,     // e
  Var,       // z
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,       // lhs ^ exponent, exponent a non-negative integer
  Call,      // builtin(lhs)
  Coeffs,    // truncated power series sum_k a_k z^k
};

/// Truncated power series. `tail_bound`, when present, is a user-supplied
/// bound on the omitted terms; it is carried along but never used to alter
/// evaluation.
struct CoefficientList {
  std::vector<Complex> coeffs;
  std::optional<double> tail_bound;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  Complex number{};
  Builtin fn = Builtin::Exp;
  unsigned exponent = 0;
  NodePtr lhs;
  NodePtr rhs;
  std::shared_ptr<const CoefficientList> series;
};

class Expr {
 public:
  Expr();  // the constant 0
  explicit Expr(NodePtr root);

  const Node& root() const { return *root_; }
  const NodePtr& ptr() const { return root_; }

  static Expr number(Complex value);
  static Expr imag_unit();
  static Expr pi();
  static Expr euler();
  static Expr var();
  static Expr add(Expr a, Expr b);
  static Expr sub(Expr a, Expr b);
  static Expr mul(Expr a, Expr b);
  static Expr div(Expr a, Expr b);
  static Expr neg(Expr a);
  static Expr pow(Expr base, unsigned exponent);
  static Expr call(Builtin fn, Expr arg);
  /// Throws std::invalid_argument when the list is empty or all zero.
  static Expr series(CoefficientList list);

 private:
  NodePtr root_;
};

enum class ParseErrorKind { Syntax, UnknownIdentifier, NonIntegerExponent };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, const std::string& what);
  ParseErrorKind kind() const { return kind_; }
  /// Byte offset into the parsed text.
  std::size_t offset() const { return offset_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
};

/// Parses the expression grammar
///
///   expr   := term { ("+"|"-") term }
///   term   := factor { ("*"|"/") factor }
///   factor := base [ "^" uint ] | "-" factor
///   base   := number | "z" | "i" | "pi" | "e" | ident "(" expr ")" | "(" expr ")"
///
/// with ident one of exp, sin, cos, sinh, cosh, sqrt, log.
Expr parse(std::string_view text);

/// Prints an expression so that `parse(print(e))` rebuilds the same tree for
/// every tree the parser can produce. Coefficient lists print as
/// `poly[n]` and do not reparse.
std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Symbolic derivative d/dz. Only constant folding is applied.
Expr derivative(const Expr& e);

/// Loads a coefficient-list source: a `poly:` header line (optionally
/// followed by `tail=<bound>`), then one `re im` pair per line. Blank lines
/// and `#` comments are ignored.
Expr load_coefficient_file(const std::string& path);
Expr parse_coefficient_text(std::string_view text);

struct TaylorResult {
  std::vector<Complex> coeffs;
  /// Per-coefficient aliasing/round-off estimate.
  std::vector<double> error_bound;
  std::size_t samples = 0;
  double radius = 0.0;
  double max_abs_on_circle = 0.0;
};

/// Coefficients a_0..a_{count-1} from the Cauchy integral on |z| = radius,
/// computed by a discrete Fourier transform of uniform samples. Throws
/// std::overflow_error if f overflows on the circle.
TaylorResult taylor_coefficients(const Expr& f, std::size_t count, double radius);

}  // namespace minmod
