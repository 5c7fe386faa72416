#pragma once

#include <cmath>
#include <limits>

#include "lscape/linalg.hpp"

namespace oracles {

using lscape::Vec;
using lscape::operator-;
using lscape::operator*;

/// Minimum of |sum theta_i g_i| over the probability simplex restricted to the
/// lattice theta_i in {0, h, 2h, ..., 1} with h = 1/steps. The innermost
/// coordinate is minimized in closed form (the norm is quadratic along it), so
/// the result equals the dense lattice minimum without enumerating it.
inline double grid_min_norm(const std::vector<Vec>& g, int steps = 1000) {
    const int m = int(g.size());
    const double h = 1.0 / steps;
    auto nrm = [](const Vec& v) { return lscape::norm2(v); };
    if (m == 1) return nrm(g[0]);

    auto axpy_copy = [](const Vec& a, double s, const Vec& b) {
        Vec r = a;
        for (size_t q = 0; q < r.size(); ++q) r[q] += s * b[q];
        return r;
    };

    // best over k in [0, kmax] of |base + k*h*dir|
    auto line_best = [&](const Vec& base, const Vec& dir, int kmax) {
        double dd = lscape::dot(dir, dir) * h * h;
        double bd = lscape::dot(base, dir) * h;
        double bb = lscape::dot(base, base);
        auto val = [&](int k) { return bb + 2.0 * k * bd + double(k) * k * dd; };
        double best = std::min(val(0), val(kmax));
        if (dd > 0) {
            double kstar = -bd / dd;
            for (int k : {int(std::floor(kstar)), int(std::ceil(kstar))})
                if (k > 0 && k < kmax) best = std::min(best, val(k));
        }
        return best;
    };

    double best = std::numeric_limits<double>::infinity();
    if (m == 2) {
        Vec dir = g[0] - g[1];
        best = line_best(g[1], dir, steps);
    } else if (m == 3) {
        Vec d12 = g[1] - g[2];
        for (int i = 0; i <= steps; ++i) {
            Vec base = axpy_copy((1.0 - i * h) * g[2], i * h, g[0]);
            best = std::min(best, line_best(base, d12, steps - i));
        }
    } else {
        Vec d23 = g[2] - g[3];
        for (int i = 0; i <= steps; ++i) {
            Vec base_i = axpy_copy((1.0 - i * h) * g[3], i * h, g[0]);
            Vec step_j = g[1] - g[3];
            for (int j = 0; j + i <= steps; ++j) {
                Vec base = axpy_copy(base_i, j * h, step_j);
                best = std::min(best, line_best(base, d23, steps - i - j));
            }
        }
    }
    return std::sqrt(std::max(0.0, best));
}

}  // namespace oracles
