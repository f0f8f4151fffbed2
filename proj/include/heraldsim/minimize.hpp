#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace heraldsim {

struct LogMinimizeOptions {
    int points_per_decade = 50;
    double rel_tol = 1e-9;     ///< relative tolerance on the argument
    int max_expansions = 3;    ///< boundary re-tries
    double expansion_decades = 3.0;
    double hard_lo = 0.0;      ///< never search below / above these
    double hard_hi = std::numeric_limits<double>::infinity();
};

struct ScalarMinimum {
    double x = 0.0;
    double fx = 0.0;
    bool at_boundary = false;  ///< minimum sits on the (expanded) search boundary
    double lo = 0.0;           ///< final search range
    double hi = 0.0;
};

/// Minimize a positive-argument function on a log grid, then refine the best
/// bracket by golden-section search in log space.
///
/// If the grid minimum lands on a boundary the range is pushed out by
/// `expansion_decades` on that side, up to `max_expansions` times.
template <class F>
ScalarMinimum minimize_log(F&& f, double lo, double hi, const LogMinimizeOptions& opt = {}) {
    lo = std::max(lo, opt.hard_lo);
    hi = std::min(hi, opt.hard_hi);
    std::vector<double> xs;
    std::vector<double> fs;
    std::size_t best = 0;
    for (int attempt = 0;; ++attempt) {
        const double llo = std::log(lo);
        const double lhi = std::log(hi);
        const auto n = static_cast<std::size_t>(
            std::max(3.0, std::ceil((lhi - llo) / std::log(10.0) * opt.points_per_decade) + 1));
        xs.resize(n);
        fs.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = std::exp(llo + (lhi - llo) * double(i) / double(n - 1));
            fs[i] = f(xs[i]);
        }
        best = std::size_t(std::min_element(fs.begin(), fs.end()) - fs.begin());
        const bool low_edge = best == 0 && lo > opt.hard_lo;
        const bool high_edge = best == n - 1 && hi < opt.hard_hi;
        if (attempt >= opt.max_expansions || (!low_edge && !high_edge)) break;
        const double factor = std::pow(10.0, opt.expansion_decades);
        if (low_edge) lo = std::max(lo / factor, opt.hard_lo);
        if (high_edge) hi = std::min(hi * factor, opt.hard_hi);
    }

    const std::size_t n = xs.size();
    if (best == 0 || best == n - 1) return {xs[best], fs[best], true, lo, hi};

    // golden section on u = log x over the bracket around the grid minimum
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(xs[best - 1]);
    double b = std::log(xs[best + 1]);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(std::exp(c));
    double fd = f(std::exp(d));
    while (b - a > opt.rel_tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(std::exp(d));
        }
    }
    ScalarMinimum out{xs[best], fs[best], false, lo, hi};
    if (fc < out.fx) out = {std::exp(c), fc, false, lo, hi};
    if (fd < out.fx) out = {std::exp(d), fd, false, lo, hi};
    return out;
}

/// Bisection in log space for a sign change of `f` between `lo` and `hi`.
/// The caller guarantees f(lo) and f(hi) have opposite signs.
template <class F>
double bisect_log(F&& f, double lo, double hi, double rel_tol = 1e-9) {
    double flo = f(lo);
    double a = std::log(lo);
    double b = std::log(hi);
    while (std::abs(b - a) > rel_tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(std::exp(m));
        if ((fm > 0) == (flo > 0)) {
            a = m;
            flo = fm;
        } else {
            b = m;
        }
    }
    return std::exp(0.5 * (a + b));
}

}  // namespace heraldsim
