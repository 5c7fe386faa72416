#include "lscape/clarke.hpp"

#include <algorithm>
#include <cmath>

namespace lscape {

std::vector<std::pair<CellId, Vec>> clarke_generators(const Params& p, const LabeledDataset& data,
                                                      double tau, int max_zeros) {
    std::vector<std::pair<CellId, Vec>> gens;
    for (CellId& u : incidence_set(p, data, tau, max_zeros)) {
        FrozenActivation f = frozen_from_cell(u, p.shape);
        Vec g = cell_gradient(p, f, data);
        gens.emplace_back(std::move(u), std::move(g));
    }
    return gens;
}

namespace {

// Minimizer of |sum_s v_s g_s| over the affine hull of the active set,
// via the KKT system [G 1; 1^T 0] [v; mu] = [0; 1]. Returns false when the
// system is numerically singular.
bool affine_minimizer(const std::vector<Vec>& gens, const std::vector<int>& active, Vec& v) {
    const int m = int(active.size());
    Matrix A(m + 1, m + 2);  // augmented [M | rhs]
    for (int r = 0; r < m; ++r) {
        for (int cidx = 0; cidx < m; ++cidx)
            A(r, cidx) = dot(gens[active[r]], gens[active[cidx]]);
        A(r, m) = 1.0;
        A(r, m + 1) = 0.0;
    }
    for (int cidx = 0; cidx < m; ++cidx) A(m, cidx) = 1.0;
    A(m, m) = 0.0;
    A(m, m + 1) = 1.0;

    // Gaussian elimination with partial pivoting
    const int n = m + 1;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(A(r, col)) > std::fabs(A(piv, col))) piv = r;
        if (std::fabs(A(piv, col)) < 1e-13) return false;
        if (piv != col)
            for (int j = 0; j <= n; ++j) std::swap(A(piv, j), A(col, j));
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            for (int j = col; j <= n; ++j) A(r, j) -= f * A(col, j);
        }
    }
    v.assign(m, 0.0);
    for (int r = 0; r < m; ++r) v[r] = A(r, n) / A(r, r);
    return true;
}

Vec combine(const std::vector<Vec>& gens, const std::vector<int>& active, const Vec& w) {
    Vec x(gens.front().size(), 0.0);
    for (size_t s = 0; s < active.size(); ++s) axpy(w[s], gens[active[s]], x);
    return x;
}

}  // namespace

MinNormResult min_norm_point(const std::vector<Vec>& generators, double tol) {
    MinNormResult res;
    if (generators.empty()) throw shape_error("min_norm_point needs at least one generator");
    const int n = int(generators.size());

    int start = 0;
    for (int j = 1; j < n; ++j)
        if (norm2(generators[j]) < norm2(generators[start])) start = j;

    std::vector<int> active = {start};
    Vec w = {1.0};
    Vec x = generators[start];

    const int max_major = 10000;
    int major = 0;
    for (; major < max_major; ++major) {
        // most opposed generator
        double xx = dot(x, x);
        int best = -1;
        double best_val = xx;
        for (int j = 0; j < n; ++j) {
            double v = dot(x, generators[j]);
            if (v < best_val - 1e-15) {
                best_val = v;
                best = j;
            }
        }
        double scale = 1.0 + xx;
        if (best < 0 || xx - best_val <= tol * scale) break;  // Wolfe optimality gap
        if (std::find(active.begin(), active.end(), best) != active.end()) break;
        active.push_back(best);
        w.push_back(0.0);

        // minor cycles
        for (int minor = 0; minor < 1000; ++minor) {
            Vec v;
            if (!affine_minimizer(generators, active, v)) {
                // affinely dependent active set: drop the smallest-weight point
                size_t drop = 0;
                for (size_t s = 1; s < w.size(); ++s)
                    if (w[s] < w[drop]) drop = s;
                active.erase(active.begin() + drop);
                w.erase(w.begin() + drop);
                if (active.size() <= 1) {
                    w = {1.0};
                    break;
                }
                continue;
            }
            bool interior = true;
            for (double vs : v)
                if (vs <= 1e-11) interior = false;
            if (interior) {
                w = v;
                break;
            }
            // line search from w toward v stopping at the simplex boundary
            double t = 1.0;
            for (size_t s = 0; s < w.size(); ++s) {
                if (v[s] < 1e-11) {
                    double denom = w[s] - v[s];
                    if (denom > 1e-15) t = std::min(t, w[s] / denom);
                }
            }
            for (size_t s = 0; s < w.size(); ++s) w[s] = (1.0 - t) * w[s] + t * v[s];
            // drop zeroed points
            for (size_t s = w.size(); s-- > 0;) {
                if (w[s] <= 1e-11) {
                    active.erase(active.begin() + s);
                    w.erase(w.begin() + s);
                }
            }
            if (active.empty()) {
                active = {start};
                w = {1.0};
                break;
            }
        }
        x = combine(generators, active, w);
    }
    res.converged = major < max_major;
    res.major_cycles = major;
    res.theta.assign(n, 0.0);
    double tsum = 0.0;
    for (size_t s = 0; s < active.size(); ++s) tsum += w[s];
    for (size_t s = 0; s < active.size(); ++s) res.theta[active[s]] = w[s] / tsum;
    // recombine from theta so the certificate is exactly reproducible
    res.point.assign(generators.front().size(), 0.0);
    for (int j = 0; j < n; ++j)
        if (res.theta[j] != 0.0) axpy(res.theta[j], generators[j], res.point);
    res.norm = norm2(res.point);
    return res;
}

CriticalityResult is_critical(const Params& p, const LabeledDataset& data, double eps_crit,
                              double tau, int max_zeros) {
    auto gens = clarke_generators(p, data, tau, max_zeros);
    std::vector<Vec> vecs;
    vecs.reserve(gens.size());
    for (auto& [u, g] : gens) vecs.push_back(g);

    if (eps_crit < 0) {
        Vec norms;
        for (const Vec& g : vecs) norms.push_back(norm2(g));
        std::sort(norms.begin(), norms.end());
        double median = norms[norms.size() / 2];
        eps_crit = 1e-6 * (1.0 + median);
    }

    MinNormResult mn = min_norm_point(vecs);
    CriticalityResult out;
    out.eps_used = eps_crit;
    out.certificate.theta = mn.theta;
    out.certificate.residual = mn.point;
    out.certificate.residual_norm = mn.norm;
    for (auto& [u, g] : gens) out.certificate.cells.push_back(std::move(u));
    out.critical = mn.converged && mn.norm <= eps_crit;
    return out;
}

}  // namespace lscape
