#include "lfs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lfs {

namespace {

using num::Op;
using num::kEps;

// Scalar helpers mirroring the guarded kernels, used by the closed forms so
// they stay independent of the graph evaluator.
double safe_div(double a, double b) {
    double d = b + kEps;
    if (std::abs(d) < num::kDenomMin) d = d < 0 ? -num::kDenomMin : num::kDenomMin;
    return a / d;
}
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
double softplus(double x) {
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
double ln_eps(double x) { return std::log(std::abs(x) + kEps); }
double log10_eps(double x) { return std::log10(std::abs(x) + kEps); }
double atanh_clamped(double x) {
    const double lim = 1.0 - num::kAtanhMargin;
    return std::atanh(std::clamp(x, -lim, lim));
}
double exp_clamped(double x) {
    return std::exp(std::clamp(x, -num::kExpArgMax, num::kExpArgMax));
}
double sigmoid_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}
double tanh_grad(double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
}
double softsign_grad(double x) {
    const double d = 1.0 + std::abs(x);
    return 1.0 / (d * d);
}

using N = HiddenStateNode;
const SourceRef Y = SourceRef::y();
const SourceRef YH = SourceRef::yhat();
SourceRef nd(std::size_t i) { return SourceRef::node(i); }

LossGenome make(std::vector<N> nodes, std::size_t root, int sign) {
    LossGenome g{std::move(nodes), root, sign};
    validate(g);
    return g;
}

std::map<std::string, BuiltinLoss> build_all() {
    std::map<std::string, BuiltinLoss> m;
    auto add = [&](std::string name, LossGenome g,
                   std::function<double(double, double)> f) {
        m.emplace(name, BuiltinLoss{name, std::move(g), std::move(f)});
    };

    // B0 = -sigmoid(softplus(yhat/(y+eps)))
    add("B0",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Softplus, nd(0), {}},
              N{Op::Sigmoid, nd(1), {}}}, 2, -1),
        [](double y, double yh) { return -sigmoid(softplus(safe_div(yh, y))); });

    // B1 = -sigmoid'(i0e(yhat/(y+eps)))
    add("B1",
        make({N{Op::SafeDiv, YH, Y}, N{Op::BesselI0e, nd(0), {}},
              N{Op::SigmoidGrad, nd(1), {}}}, 2, -1),
        [](double y, double yh) {
            return -sigmoid_grad(num::bessel_i0e(safe_div(yh, y)));
        });

    // B2 = -i1e(erf(yhat/(y+eps)))
    add("B2",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Erf, nd(0), {}},
              N{Op::BesselI1e, nd(1), {}}}, 2, -1),
        [](double y, double yh) {
            return -num::bessel_i1e(std::erf(safe_div(yh, y)));
        });

    // C0 = -ln(arctanh(yhat/(y+eps)))
    add("C0",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Arctanh, nd(0), {}},
              N{Op::Log, nd(1), {}}}, 2, -1),
        [](double y, double yh) {
            return -ln_eps(atanh_clamped(safe_div(yh, y)));
        });

    // C1 = -ln(softplus(yhat/(y+eps)))
    add("C1",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Softplus, nd(0), {}},
              N{Op::Log, nd(1), {}}}, 2, -1),
        [](double y, double yh) { return -ln_eps(softplus(safe_div(yh, y))); });

    // C2 = -sigmoid(log10(yhat/(y+eps)))
    add("C2",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Log10, nd(0), {}},
              N{Op::Sigmoid, nd(1), {}}}, 2, -1),
        [](double y, double yh) { return -sigmoid(log10_eps(safe_div(yh, y))); });

    // M0 = -i1(arctanh(log10(yhat))) * y
    add("M0",
        make({N{Op::Log10, YH, {}}, N{Op::Arctanh, nd(0), {}},
              N{Op::BesselI1, nd(1), {}}, N{Op::Mul, nd(2), Y}}, 3, -1),
        [](double y, double yh) {
            const double a = atanh_clamped(log10_eps(yh));
            return -num::bessel_i1(std::clamp(a, -num::kExpArgMax, num::kExpArgMax)) * y;
        });

    // M1 = ln(1 + exp(yhat - y))
    add("M1",
        make({N{Op::Sub, YH, Y}, N{Op::Softplus, nd(0), {}}}, 1, 1),
        [](double y, double yh) { return softplus(yh - y); });

    // M2 = arcsinh(i0(y - yhat))
    add("M2",
        make({N{Op::Sub, Y, YH}, N{Op::BesselI0, nd(0), {}},
              N{Op::Arcsinh, nd(1), {}}}, 2, 1),
        [](double y, double yh) {
            return std::asinh(num::bessel_i0(y - yh));
        });

    // R0 = tanh'(i0e(y/(yhat+eps))) + i0e(y/(yhat+eps))
    add("R0",
        make({N{Op::SafeDiv, Y, YH}, N{Op::BesselI0e, nd(0), {}},
              N{Op::TanhGrad, nd(1), {}}, N{Op::Add, nd(2), nd(1)}}, 3, 1),
        [](double y, double yh) {
            const double b = num::bessel_i0e(safe_div(y, yh));
            return tanh_grad(b) + b;
        });

    // R1 = L / sqrt(1 + (L + y)^2),  L = log10(yhat/(y+eps))
    add("R1",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Log10, nd(0), {}},
              N{Op::Add, nd(1), Y}, N{Op::ScaledDiv, nd(1), nd(2)}}, 3, 1),
        [](double y, double yh) {
            const double l = log10_eps(safe_div(yh, y));
            const double s = l + y;
            return l / std::sqrt(1.0 + s * s);
        });

    // R2 = |L| ^ |i0(y)| = exp(|i0(y)| * ln(|L|+eps)),  L = log10(yhat/(y+eps))
    add("R2",
        make({N{Op::SafeDiv, YH, Y}, N{Op::Log10, nd(0), {}},
              N{Op::BesselI0, Y, {}}, N{Op::Abs, nd(2), {}},
              N{Op::Log, nd(1), {}}, N{Op::Mul, nd(3), nd(4)},
              N{Op::Exp, nd(5), {}}}, 6, 1),
        [](double y, double yh) {
            const double l = log10_eps(safe_div(yh, y));
            const double b = std::abs(num::bessel_i0(y));
            return exp_clamped(b * ln_eps(l));
        });

    // A0 = -ln(softsign'(log10(yhat))) * y
    add("A0",
        make({N{Op::Log10, YH, {}}, N{Op::SoftsignGrad, nd(0), {}},
              N{Op::Log, nd(1), {}}, N{Op::Mul, nd(2), Y}}, 3, -1),
        [](double y, double yh) {
            return -ln_eps(softsign_grad(log10_eps(yh))) * y;
        });

    // A1 = -ln(i0e(log10(yhat))) * y
    add("A1",
        make({N{Op::Log10, YH, {}}, N{Op::BesselI0e, nd(0), {}},
              N{Op::Log, nd(1), {}}, N{Op::Mul, nd(2), Y}}, 3, -1),
        [](double y, double yh) {
            return -ln_eps(num::bessel_i0e(log10_eps(yh))) * y;
        });

    // A2 = y / (i0e(ln(yhat+eps)) + eps), the inverse bessel logarithm
    add("A2",
        make({N{Op::Log, YH, {}}, N{Op::BesselI0e, nd(0), {}},
              N{Op::SafeDiv, Y, nd(1)}}, 2, 1),
        [](double y, double yh) {
            return safe_div(y, num::bessel_i0e(ln_eps(yh)));
        });

    // CE = -y * ln(|yhat|+eps)
    add("CE",
        make({N{Op::Log, YH, {}}, N{Op::Mul, Y, nd(0)}}, 1, -1),
        [](double y, double yh) { return -y * ln_eps(yh); });

    return m;
}

const std::map<std::string, BuiltinLoss>& all_builtins() {
    static const std::map<std::string, BuiltinLoss> m = build_all();
    return m;
}

void normalize_field(const Tensor& raw, Tensor& out, bool& constant) {
    double lo = raw[0], hi = raw[0];
    for (std::size_t i = 0; i < raw.size(); ++i) {
        lo = std::min(lo, raw[i]);
        hi = std::max(hi, raw[i]);
    }
    out = Tensor(raw.shape());
    if (hi - lo <= 0.0) {
        constant = true;
        return;
    }
    constant = false;
    for (std::size_t i = 0; i < raw.size(); ++i)
        out[i] = (raw[i] - lo) / (hi - lo);
}

std::vector<double> axis(std::size_t samples, double delta) {
    std::vector<double> v(samples);
    for (std::size_t i = 0; i < samples; ++i)
        v[i] = delta + (1.0 - 2.0 * delta) * static_cast<double>(i) /
                           static_cast<double>(samples - 1);
    return v;
}

} // namespace

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : all_builtins()) v.push_back(k);
        return v;
    }();
    return names;
}

bool is_builtin(const std::string& name) {
    return all_builtins().count(name) != 0;
}

const BuiltinLoss& builtin(const std::string& name) {
    const auto& m = all_builtins();
    auto it = m.find(name);
    if (it == m.end())
        throw std::invalid_argument("unknown builtin loss: " + name);
    return it->second;
}

BinaryPhenotype binary_phenotype(const LossGenome& g, std::size_t samples,
                                 double delta) {
    BinaryPhenotype p;
    p.yhat = axis(samples, delta);
    p.raw.resize(samples);
    for (std::size_t i = 0; i < samples; ++i)
        p.raw[i] = g.sign * eval_element(g, 1.0, p.yhat[i]);
    Tensor raw({samples});
    for (std::size_t i = 0; i < samples; ++i) raw[i] = p.raw[i];
    Tensor norm;
    normalize_field(raw, norm, p.constant);
    p.normalized.assign(samples, 0.0);
    if (!p.constant)
        for (std::size_t i = 0; i < samples; ++i) p.normalized[i] = norm[i];
    return p;
}

PhenotypeGrid surface(const LossGenome& g, std::size_t samples, double delta) {
    PhenotypeGrid grid;
    grid.y_axis = axis(samples, delta);
    grid.yhat_axis = axis(samples, delta);
    grid.raw = Tensor::matrix(samples, samples);
    for (std::size_t i = 0; i < samples; ++i)
        for (std::size_t j = 0; j < samples; ++j)
            grid.raw.at(i, j) =
                g.sign * eval_element(g, grid.y_axis[i], grid.yhat_axis[j]);
    normalize_field(grid.raw, grid.normalized, grid.constant);
    if (grid.constant) grid.normalized = Tensor::matrix(samples, samples);
    return grid;
}

PhenotypeGrid difference_surface(const LossGenome& a, const LossGenome& b,
                                 std::size_t samples, double delta) {
    PhenotypeGrid ga = surface(a, samples, delta);
    PhenotypeGrid gb = surface(b, samples, delta);
    PhenotypeGrid d;
    d.y_axis = ga.y_axis;
    d.yhat_axis = ga.yhat_axis;
    d.raw = Tensor::matrix(samples, samples);
    d.normalized = Tensor::matrix(samples, samples);
    for (std::size_t i = 0; i < d.raw.size(); ++i) {
        d.raw[i] = ga.raw[i] - gb.raw[i];
        d.normalized[i] = ga.normalized[i] - gb.normalized[i];
    }
    d.constant = ga.constant && gb.constant;
    return d;
}

GridMax normalized_max(const PhenotypeGrid& grid) {
    GridMax m;
    m.value = grid.normalized[0];
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.normalized.size(); ++i) {
        if (grid.normalized[i] > m.value) {
            m.value = grid.normalized[i];
            best = i;
        }
    }
    const std::size_t cols = grid.yhat_axis.size();
    m.y = grid.y_axis[best / cols];
    m.yhat = grid.yhat_axis[best % cols];
    return m;
}

} // namespace lfs
