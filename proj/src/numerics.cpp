#include "lfs/numerics.hpp"

#include <array>
#include <cmath>

namespace lfs::num {

namespace {

constexpr std::array<std::string_view, kOpCount> kOpNames = {
    "neg",          "exp",          "sigmoid",     "softsign",
    "softsign_grad","softplus",     "erf",         "erfc",
    "sin",          "sinh",         "arcsinh",     "tanh",
    "tanh_grad",    "arctanh",      "reciprocal",  "abs",
    "square",       "sqrt",         "log",         "log10",
    "sigmoid_grad", "relu",         "min0",        "bessel_i0",
    "bessel_i1",    "bessel_i1e",   "bessel_i0e",
    "add",          "sub",          "mul",         "safe_div",
    "scaled_div",   "max",          "min",
};

double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Power series sum_k (t/2)^{2k} / (k!)^2; all terms positive, so no
// cancellation. Used for |t| <= 8.
double i0_series(double t) {
    const double q = 0.25 * t * t;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

double i1_series(double t) {
    const double q = 0.25 * t * t;
    double term = 0.5 * t, sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// Asymptotic expansion of e^{-t} I_nu(t) for t > 8, truncated at the
// smallest term.
double ie_asymptotic(double t, double nu4sq) {
    double term = 1.0, sum = 1.0;
    double prev = std::abs(term);
    for (int k = 1; k < 30; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (odd * odd - nu4sq) / (8.0 * k * t);
        if (std::abs(term) >= prev) break;
        prev = std::abs(term);
        sum += term;
        if (prev < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * M_PI * t);
}

// d/dx I1(x), even in x.
double bessel_i1_prime(double x) {
    const double t = std::abs(x);
    if (t < 1e-4) return 0.5 + 0.1875 * t * t;
    return bessel_i0(x) - bessel_i1(x) / x;
}

} // namespace

std::string_view op_name(Op op) {
    return kOpNames[static_cast<int>(op)];
}

Op op_from_name(std::string_view name) {
    for (int i = 0; i < kOpCount; ++i) {
        if (kOpNames[i] == name) return static_cast<Op>(i);
    }
    throw corrupt_genome_error("unknown operation id: " + std::string(name));
}

double bessel_i0(double x) {
    const double t = std::abs(x);
    if (t <= 8.0) return i0_series(t);
    return std::exp(t) * ie_asymptotic(t, 0.0);
}

double bessel_i1(double x) {
    const double t = std::abs(x);
    const double v = t <= 8.0 ? i1_series(t) : std::exp(t) * ie_asymptotic(t, 4.0);
    return x < 0 ? -v : v;
}

double bessel_i0e(double x) {
    const double t = std::abs(x);
    if (t <= 8.0) return std::exp(-t) * i0_series(t);
    return ie_asymptotic(t, 0.0);
}

double bessel_i1e(double x) {
    const double t = std::abs(x);
    const double v = t <= 8.0 ? std::exp(-t) * i1_series(t) : ie_asymptotic(t, 4.0);
    return x < 0 ? -v : v;
}

double eval_unary(Op op, double x) {
    switch (op) {
    case Op::Neg: return -x;
    case Op::Exp: return std::exp(clamp(x, -kExpArgMax, kExpArgMax));
    case Op::Sigmoid: return sigmoid(x);
    case Op::Softsign: return x / (1.0 + std::abs(x));
    case Op::SoftsignGrad: {
        const double d = 1.0 + std::abs(x);
        return 1.0 / (d * d);
    }
    case Op::Softplus: return softplus(x);
    case Op::Erf: return std::erf(x);
    case Op::Erfc: return std::erfc(x);
    case Op::Sin: return std::sin(x);
    case Op::Sinh: return std::sinh(clamp(x, -kExpArgMax, kExpArgMax));
    case Op::Arcsinh: return std::asinh(x);
    case Op::Tanh: return std::tanh(x);
    case Op::TanhGrad: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Op::Arctanh:
        return std::atanh(clamp(x, -1.0 + kAtanhMargin, 1.0 - kAtanhMargin));
    case Op::Reciprocal: {
        double d = x + kEps;
        if (std::abs(d) < kDenomMin) d = d < 0 ? -kDenomMin : kDenomMin;
        return 1.0 / d;
    }
    case Op::Abs: return std::abs(x);
    case Op::Square: {
        const double v = x * x;
        return v > kSquareMax ? kSquareMax : v;
    }
    case Op::Sqrt: return std::sqrt(std::abs(x));
    case Op::Log: return std::log(std::abs(x) + kEps);
    case Op::Log10: return std::log10(std::abs(x) + kEps);
    case Op::SigmoidGrad: {
        const double s = sigmoid(x);
        return s * (1.0 - s);
    }
    case Op::Relu: return x > 0 ? x : 0.0;
    case Op::Min0: return x < 0 ? x : 0.0;
    case Op::BesselI0: return bessel_i0(clamp(x, -kExpArgMax, kExpArgMax));
    case Op::BesselI1: return bessel_i1(clamp(x, -kExpArgMax, kExpArgMax));
    case Op::BesselI1e: return bessel_i1e(x);
    case Op::BesselI0e: return bessel_i0e(x);
    default:
        throw corrupt_genome_error("eval_unary on binary op " +
                                   std::string(op_name(op)));
    }
}

double grad_unary(Op op, double x) {
    switch (op) {
    case Op::Neg: return -1.0;
    case Op::Exp:
        if (std::abs(x) > kExpArgMax) return 0.0;
        return std::exp(x);
    case Op::Sigmoid: {
        const double s = sigmoid(x);
        return s * (1.0 - s);
    }
    case Op::Softsign: {
        const double d = 1.0 + std::abs(x);
        return 1.0 / (d * d);
    }
    case Op::SoftsignGrad: {
        const double d = 1.0 + std::abs(x);
        return -2.0 * sign(x) / (d * d * d);
    }
    case Op::Softplus: return sigmoid(x);
    case Op::Erf: return 2.0 / std::sqrt(M_PI) * std::exp(-x * x);
    case Op::Erfc: return -2.0 / std::sqrt(M_PI) * std::exp(-x * x);
    case Op::Sin: return std::cos(x);
    case Op::Sinh:
        if (std::abs(x) > kExpArgMax) return 0.0;
        return std::cosh(x);
    case Op::Arcsinh: return 1.0 / std::sqrt(1.0 + x * x);
    case Op::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Op::TanhGrad: {
        const double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    }
    case Op::Arctanh:
        if (std::abs(x) > 1.0 - kAtanhMargin) return 0.0;
        return 1.0 / (1.0 - x * x);
    case Op::Reciprocal: {
        const double d = x + kEps;
        if (std::abs(d) < kDenomMin) return 0.0;
        return -1.0 / (d * d);
    }
    case Op::Abs: return sign(x);
    case Op::Square:
        if (x * x > kSquareMax) return 0.0;
        return 2.0 * x;
    case Op::Sqrt:
        if (x == 0.0) return 0.0;
        return sign(x) / (2.0 * std::sqrt(std::abs(x)));
    case Op::Log: return sign(x) / (std::abs(x) + kEps);
    case Op::Log10: return sign(x) / ((std::abs(x) + kEps) * std::log(10.0));
    case Op::SigmoidGrad: {
        const double s = sigmoid(x);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Op::Relu: return x > 0 ? 1.0 : 0.0;
    case Op::Min0: return x < 0 ? 1.0 : 0.0;
    case Op::BesselI0:
        if (std::abs(x) > kExpArgMax) return 0.0;
        return bessel_i1(x);
    case Op::BesselI1:
        if (std::abs(x) > kExpArgMax) return 0.0;
        return bessel_i1_prime(x);
    case Op::BesselI1e: {
        // d/dx e^{-|x|} I1(x) = i0e - i1e/x - sign(x) i1e
        const double t = std::abs(x);
        if (t < 1e-4) return 0.5 - t;   // series: (1/2 + 3x^2/16)e^{-|x|} - i1e/x ~ 1/2 - |x|
        return bessel_i0e(x) - bessel_i1e(x) / x - sign(x) * bessel_i1e(x);
    }
    case Op::BesselI0e:
        return bessel_i1e(x) - sign(x) * bessel_i0e(x);
    default:
        throw corrupt_genome_error("grad_unary on binary op " +
                                   std::string(op_name(op)));
    }
}

double eval_binary(Op op, double x1, double x2) {
    switch (op) {
    case Op::Add: return x1 + x2;
    case Op::Sub: return x1 - x2;
    case Op::Mul: return x1 * x2;
    case Op::SafeDiv: {
        double d = x2 + kEps;
        if (std::abs(d) < kDenomMin) d = d < 0 ? -kDenomMin : kDenomMin;
        return x1 / d;
    }
    case Op::ScaledDiv: return x1 / std::sqrt(1.0 + x2 * x2);
    case Op::Max: return x1 >= x2 ? x1 : x2;
    case Op::Min: return x1 <= x2 ? x1 : x2;
    default:
        throw corrupt_genome_error("eval_binary on unary op " +
                                   std::string(op_name(op)));
    }
}

void grad_binary(Op op, double x1, double x2, double& d1, double& d2) {
    switch (op) {
    case Op::Add: d1 = 1.0; d2 = 1.0; return;
    case Op::Sub: d1 = 1.0; d2 = -1.0; return;
    case Op::Mul: d1 = x2; d2 = x1; return;
    case Op::SafeDiv: {
        const double d = x2 + kEps;
        if (std::abs(d) < kDenomMin) { d1 = 0.0; d2 = 0.0; return; }
        d1 = 1.0 / d;
        d2 = -x1 / (d * d);
        return;
    }
    case Op::ScaledDiv: {
        const double s = std::sqrt(1.0 + x2 * x2);
        d1 = 1.0 / s;
        d2 = -x1 * x2 / (s * s * s);
        return;
    }
    case Op::Max:
        d1 = x1 >= x2 ? 1.0 : 0.0;
        d2 = 1.0 - d1;
        return;
    case Op::Min:
        d1 = x1 <= x2 ? 1.0 : 0.0;
        d2 = 1.0 - d1;
        return;
    default:
        throw corrupt_genome_error("grad_binary on unary op " +
                                   std::string(op_name(op)));
    }
}

double eval_op(Op op, double x1, double x2) {
    return is_unary(op) ? eval_unary(op, x1) : eval_binary(op, x1, x2);
}

namespace {

void validate_distribution(std::span<const double> p, const char* which) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0)
            throw distribution_error(std::string(which) + ": negative probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw distribution_error(std::string(which) + ": probabilities sum to " +
                                 std::to_string(sum));
}

void check_sizes(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw distribution_error("distribution size mismatch");
}

} // namespace

double entropy(std::span<const double> p) {
    validate_distribution(p, "p");
    double e = 0.0;
    for (double v : p)
        if (v > 0.0) e -= v * std::log(v);
    return e;
}

double kl(std::span<const double> p, std::span<const double> q) {
    check_sizes(p, q);
    validate_distribution(p, "p");
    validate_distribution(q, "q");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) d += p[i] * (std::log(p[i]) - std::log(q[i]));
    return d;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
    check_sizes(p, q);
    validate_distribution(p, "p");
    validate_distribution(q, "q");
    double ce = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) ce -= p[i] * std::log(q[i]);
    return ce;
}

} // namespace lfs::num
