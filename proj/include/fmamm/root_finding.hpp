#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <utility>

#include "fmamm/error.hpp"

namespace fmamm::root {

struct Bracket {
    double lo;
    double hi;
};

struct Result {
    double x;
    int iterations;
};

inline constexpr int kMaxIterations = 200;

/// Brent's method on a bracket with f(lo) and f(hi) of opposite sign.
/// Terminates when the bracket is narrower than abs_tol + rel_tol*|x| or f hits zero.
template <std::invocable<double> F>
Result brent(F&& f, Bracket br, double rel_tol = 1e-15, double abs_tol = 0.0,
             int max_iter = kMaxIterations) {
    double a = br.lo, b = br.hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a, 0};
    if (fb == 0.0) return {b, 0};
    if ((fa > 0.0) == (fb > 0.0)) {
        throw ConvergenceError("brent: root not bracketed on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]");
    }

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 1; iter <= max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                           0.5 * (abs_tol + rel_tol * std::abs(b));
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return {b, iter};

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic interpolation, secant when only two points are distinct
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    throw ConvergenceError("brent: no convergence within " + std::to_string(max_iter) +
                           " iterations");
}

/// Plain bisection. Slower than brent() but makes no smoothness assumption; used where a
/// function is only piecewise monotone.
template <std::invocable<double> F>
Result bisect(F&& f, Bracket br, double rel_tol = 1e-15, int max_iter = kMaxIterations) {
    double lo = br.lo, hi = br.hi;
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return {lo, 0};
    if (fhi == 0.0) return {hi, 0};
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw ConvergenceError("bisect: root not bracketed");
    }
    for (int iter = 1; iter <= max_iter; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi || (hi - lo) <= rel_tol * std::abs(mid)) return {mid, iter};
        const double fm = f(mid);
        if (fm == 0.0) return {mid, iter};
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo + hi), max_iter};
}

/// Grows a positive bracket [center/factor, center*factor] geometrically until f changes sign.
template <std::invocable<double> F>
Bracket expand_geometric(F&& f, double center, double factor = 10.0, int max_iter = kMaxIterations) {
    if (!(center > 0.0) || !std::isfinite(center)) {
        throw ConvergenceError("expand_geometric: center must be positive and finite");
    }
    double lo = center / factor, hi = center * factor;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double flo = f(lo), fhi = f(hi);
        if ((flo > 0.0) != (fhi > 0.0) || flo == 0.0 || fhi == 0.0) return {lo, hi};
        lo /= factor;
        hi *= factor;
        if (lo == 0.0 || !std::isfinite(hi)) break;
    }
    throw ConvergenceError("expand_geometric: no sign change found");
}

/// Shrinks toward the open interval (lo, hi) until f changes sign. f must be finite on the
/// interior; the endpoints themselves are never evaluated.
template <std::invocable<double> F>
Bracket shrink_open_interval(F&& f, double lo, double hi, int max_iter = kMaxIterations) {
    const double width = hi - lo;
    if (!(width > 0.0)) throw ConvergenceError("shrink_open_interval: empty interval");
    double inset = 0.25;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double a = lo + inset * width, b = hi - inset * width;
        const double fa = f(a), fb = f(b);
        if ((fa > 0.0) != (fb > 0.0) || fa == 0.0 || fb == 0.0) return {a, b};
        inset *= 0.1;
        if (lo + inset * width == lo || hi - inset * width == hi) break;
    }
    throw ConvergenceError("shrink_open_interval: no sign change found");
}

} // namespace fmamm::root
