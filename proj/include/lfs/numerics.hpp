#ifndef LFS_NUMERICS_HPP
#define LFS_NUMERICS_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lfs::num {

// Shared epsilon: every op kernel that adds an epsilon uses this one, so a
// serialized genome means the same function everywhere.
inline constexpr double kEps = 1e-7;

// Guard constants. Evolution composes ops arbitrarily; these keep every
// kernel finite on [-1e6, 1e6] and the backward pass total.
inline constexpr double kExpArgMax = 60.0;     // exp, sinh, bessel_i0/i1 inputs
inline constexpr double kAtanhMargin = 1e-6;   // arctanh input pulled off +-1
inline constexpr double kSquareMax = 1e12;     // x^2 output cap
inline constexpr double kDenomMin = 1e-10;     // minimum |denominator| in divisions

// Raised when a genome references an operation id that does not exist.
struct corrupt_genome_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by entropy/kl/cross_entropy on a non-normalized distribution.
struct distribution_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The 27 unary operations followed by the 7 binary operations.
enum class Op : int {
    // unary
    Neg,
    Exp,
    Sigmoid,
    Softsign,
    SoftsignGrad,
    Softplus,
    Erf,
    Erfc,
    Sin,
    Sinh,
    Arcsinh,
    Tanh,
    TanhGrad,
    Arctanh,
    Reciprocal,   // 1/(x+eps)
    Abs,
    Square,
    Sqrt,         // sqrt(|x|)
    Log,          // ln(|x|+eps)
    Log10,        // log10(|x|+eps)
    SigmoidGrad,
    Relu,         // max(x, 0)
    Min0,         // min(x, 0)
    BesselI0,
    BesselI1,
    BesselI1e,
    BesselI0e,
    // binary
    Add,
    Sub,
    Mul,
    SafeDiv,      // x1/(x2+eps)
    ScaledDiv,    // x1/sqrt(1+x2^2)
    Max,
    Min,
};

inline constexpr int kUnaryOpCount = 27;
inline constexpr int kBinaryOpCount = 7;
inline constexpr int kOpCount = kUnaryOpCount + kBinaryOpCount;

inline constexpr int arity(Op op) {
    return static_cast<int>(op) < kUnaryOpCount ? 1 : 2;
}
inline constexpr bool is_unary(Op op) { return arity(op) == 1; }

std::string_view op_name(Op op);
Op op_from_name(std::string_view name);   // throws corrupt_genome_error

// Modified Bessel functions of the first kind (unguarded).
double bessel_i0(double x);
double bessel_i1(double x);
double bessel_i0e(double x);   // e^{-|x|} I0(x), stable for large |x|
double bessel_i1e(double x);

// Guarded evaluation. eval_unary/eval_binary check the arity and throw
// corrupt_genome_error on mismatch.
double eval_unary(Op op, double x);
double eval_binary(Op op, double x1, double x2);
double eval_op(Op op, double x1, double x2 = 0.0);

// Partial derivatives of the guarded functions. A clamped region has
// derivative 0 (flat extension).
double grad_unary(Op op, double x);
void grad_binary(Op op, double x1, double x2, double& d1, double& d2);

// Information-theoretic references (natural log). Inputs must be nonnegative
// and sum to 1 within 1e-9, else distribution_error.
double entropy(std::span<const double> p);
double kl(std::span<const double> p, std::span<const double> q);
double cross_entropy(std::span<const double> p, std::span<const double> q);

} // namespace lfs::num

#endif
