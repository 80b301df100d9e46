// Shared oracles for the unit and acceptance suites.
#ifndef LFS_TESTS_HELPERS_HPP
#define LFS_TESTS_HELPERS_HPP

#include <cmath>
#include <utility>

#include "lfs/numerics.hpp"
#include "lfs/rng.hpp"

namespace lfs::testing {

inline double uniform_in(RngStream& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.next_double();
}

// Signed magnitude in [lo, hi]: keeps samples away from a kink at 0.
inline double away_from_zero(RngStream& rng, double lo, double hi) {
    const double m = uniform_in(rng, lo, hi);
    return rng.next_bool() ? m : -m;
}

// A point in the guarded interior of the op's domain: off clamp boundaries
// and off kinks, so central differences of the guarded kernel are valid.
inline double sample_unary_interior(num::Op op, RngStream& rng) {
    using num::Op;
    switch (op) {
    case Op::Arctanh: return uniform_in(rng, -0.95, 0.95);
    case Op::Reciprocal:
    case Op::Sqrt:
    case Op::Log:
    case Op::Log10:
    case Op::Abs:
    case Op::Relu:
    case Op::Min0: return away_from_zero(rng, 0.1, 4.0);
    default: return uniform_in(rng, -4.0, 4.0);
    }
}

inline std::pair<double, double> sample_binary_interior(num::Op op, RngStream& rng) {
    using num::Op;
    double x1 = uniform_in(rng, -4.0, 4.0);
    double x2 = uniform_in(rng, -4.0, 4.0);
    if (op == Op::SafeDiv) x2 = away_from_zero(rng, 0.1, 4.0);
    if ((op == Op::Max || op == Op::Min) && std::abs(x1 - x2) < 0.05) x1 = x2 + 0.5;
    return {x1, x2};
}

inline double rel_err(double analytic, double fd) {
    return std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
}

// Max relative FD error over n interior points of one op (h = 1e-5).
inline double max_fd_error(num::Op op, std::size_t n, RngStream& rng) {
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (num::is_unary(op)) {
            const double x = sample_unary_interior(op, rng);
            const double fd =
                (num::eval_unary(op, x + h) - num::eval_unary(op, x - h)) / (2 * h);
            worst = std::max(worst, rel_err(num::grad_unary(op, x), fd));
        } else {
            const auto [x1, x2] = sample_binary_interior(op, rng);
            double d1, d2;
            num::grad_binary(op, x1, x2, d1, d2);
            const double fd1 = (num::eval_binary(op, x1 + h, x2) -
                                num::eval_binary(op, x1 - h, x2)) / (2 * h);
            const double fd2 = (num::eval_binary(op, x1, x2 + h) -
                                num::eval_binary(op, x1, x2 - h)) / (2 * h);
            worst = std::max({worst, rel_err(d1, fd1), rel_err(d2, fd2)});
        }
    }
    return worst;
}

} // namespace lfs::testing

#endif
