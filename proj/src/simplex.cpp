#include "lscape/simplex.hpp"

#include <cmath>
#include <limits>

namespace lscape {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-10;
}  // namespace

LpProblem::LpProblem(int n)
    : num_vars(n), objective(n, 0.0), lower(n, 0.0), upper(n, kInf) {}

void LpProblem::add_row(const Vec& coeffs, Rel rel, double b) {
    rows.push_back(coeffs);
    rels.push_back(rel);
    rhs.push_back(b);
}

namespace {

// Standard-form tableau simplex with Bland's rule.
// min c^T y  s.t.  A y = b, y >= 0, b >= 0.
struct Tableau {
    int m, n;              // constraints, structural+slack+artificial columns
    int first_blocked;     // columns >= this may never enter the basis
    std::vector<Vec> a;    // m rows of length n
    Vec b;                 // length m, kept nonnegative
    Vec cost;              // length n
    std::vector<int> basis;

    bool pivot_once() {
        // reduced costs via basis costs (explicitly maintained canonical form)
        int enter = -1;
        for (int j = 0; j < first_blocked; ++j) {
            if (cost[j] < -kPivotTol) { enter = j; break; }  // Bland: first index
        }
        if (enter < 0) return false;
        int leave = -1;
        double best = kInf;
        for (int i = 0; i < m; ++i) {
            if (a[i][enter] > kPivotTol) {
                double ratio = b[i] / a[i][enter];
                if (ratio < best - 1e-12 ||
                    (ratio < best + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) { m = -1; return false; }  // unbounded marker
        double piv = a[leave][enter];
        for (int j = 0; j < n; ++j) a[leave][j] /= piv;
        b[leave] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = a[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) a[i][j] -= f * a[leave][j];
            b[i] -= f * b[leave];
            if (b[i] < 0 && b[i] > -1e-11) b[i] = 0;
        }
        double f = cost[enter];
        if (f != 0.0) {
            for (int j = 0; j < n; ++j) cost[j] -= f * a[leave][j];
        }
        basis[leave] = enter;
        return true;
    }

    // returns false on unbounded
    bool run() {
        int guard = 20000;
        while (pivot_once()) {
            if (--guard <= 0) break;
        }
        return m >= 0;
    }
};

}  // namespace

LpResult solve_lp(const LpProblem& p) {
    // Shift variables to y = x - lower >= 0 where lower is finite;
    // split fully free variables into y+ - y-.
    const int nv = p.num_vars;
    std::vector<int> col_pos(nv, -1), col_neg(nv, -1);
    Vec shift(nv, 0.0);
    int ncols = 0;
    for (int j = 0; j < nv; ++j) {
        if (std::isfinite(p.lower[j])) {
            shift[j] = p.lower[j];
            col_pos[j] = ncols++;
        } else {
            col_pos[j] = ncols++;
            col_neg[j] = ncols++;
        }
    }
    // upper bounds become extra rows y_j <= upper - lower
    int nrows = int(p.rows.size());
    std::vector<Vec> rows;
    std::vector<Rel> rels;
    Vec rhs;
    for (int i = 0; i < nrows; ++i) {
        Vec r(ncols, 0.0);
        double b = p.rhs[i];
        for (int j = 0; j < nv; ++j) {
            double cj = p.rows[i][j];
            if (cj == 0.0) continue;
            r[col_pos[j]] += cj;
            if (col_neg[j] >= 0) r[col_neg[j]] -= cj;
            b -= cj * shift[j];
        }
        rows.push_back(std::move(r));
        rels.push_back(p.rels[i]);
        rhs.push_back(b);
    }
    for (int j = 0; j < nv; ++j) {
        if (std::isfinite(p.upper[j])) {
            Vec r(ncols, 0.0);
            r[col_pos[j]] = 1.0;
            if (col_neg[j] >= 0) r[col_neg[j]] = -1.0;
            rows.push_back(std::move(r));
            rels.push_back(Rel::LE);
            rhs.push_back(p.upper[j] - shift[j]);
        }
    }

    const int m = int(rows.size());
    // add slack/surplus, then artificials; ensure b >= 0 first
    for (int i = 0; i < m; ++i) {
        if (rhs[i] < 0) {
            for (double& v : rows[i]) v = -v;
            rhs[i] = -rhs[i];
            rels[i] = rels[i] == Rel::LE ? Rel::GE : (rels[i] == Rel::GE ? Rel::LE : Rel::EQ);
        }
    }
    int nslack = 0;
    for (Rel r : rels)
        if (r != Rel::EQ) ++nslack;
    int ntotal = ncols + nslack + m;  // artificial per row (unused ones wasted, fine)

    Tableau t;
    t.m = m;
    t.n = ntotal;
    t.first_blocked = ntotal;  // phase 1: all columns may enter
    t.a.assign(m, Vec(ntotal, 0.0));
    t.b = rhs;
    t.basis.assign(m, -1);
    int sj = ncols;
    std::vector<int> art(m, -1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < ncols; ++j) t.a[i][j] = rows[i][j];
        if (rels[i] == Rel::LE) {
            t.a[i][sj] = 1.0;
            t.basis[i] = sj;
            ++sj;
        } else if (rels[i] == Rel::GE) {
            t.a[i][sj] = -1.0;
            ++sj;
        }
    }
    int aj = ncols + nslack;
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] < 0) {
            t.a[i][aj] = 1.0;
            t.basis[i] = aj;
            art[i] = aj;
            ++aj;
        }
    }

    // Phase 1: minimize sum of artificials.
    t.cost.assign(ntotal, 0.0);
    for (int i = 0; i < m; ++i)
        if (art[i] >= 0) t.cost[art[i]] = 1.0;
    for (int i = 0; i < m; ++i) {
        if (art[i] >= 0) {
            for (int j = 0; j < ntotal; ++j) t.cost[j] -= t.a[i][j];
        }
    }
    if (!t.run()) return {LpStatus::Infeasible, {}, 0.0};
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (t.basis[i] >= ncols + nslack) infeas += t.b[i];
    if (infeas > 1e-8) return {LpStatus::Infeasible, {}, 0.0};

    // Drive any residual artificial out of the basis if possible.
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] >= ncols + nslack && t.b[i] <= 1e-9) {
            for (int j = 0; j < ncols + nslack; ++j) {
                if (std::fabs(t.a[i][j]) > kPivotTol) {
                    double piv = t.a[i][j];
                    for (int k = 0; k < ntotal; ++k) t.a[i][k] /= piv;
                    t.b[i] /= piv;
                    for (int r2 = 0; r2 < m; ++r2) {
                        if (r2 == i) continue;
                        double f = t.a[r2][j];
                        if (f == 0.0) continue;
                        for (int k = 0; k < ntotal; ++k) t.a[r2][k] -= f * t.a[i][k];
                        t.b[r2] -= f * t.b[i];
                    }
                    t.basis[i] = j;
                    break;
                }
            }
        }
    }

    // Phase 2: original objective over structural columns, artificials forbidden.
    Vec c2(ntotal, 0.0);
    for (int j = 0; j < nv; ++j) {
        c2[col_pos[j]] += p.objective[j];
        if (col_neg[j] >= 0) c2[col_neg[j]] -= p.objective[j];
    }
    t.first_blocked = ncols + nslack;  // artificials may never re-enter
    t.cost = c2;
    for (int i = 0; i < m; ++i) {
        double f = t.cost[t.basis[i]];
        if (f != 0.0) {
            for (int j = 0; j < ntotal; ++j) t.cost[j] -= f * t.a[i][j];
        }
    }
    if (!t.run()) return {LpStatus::Unbounded, {}, 0.0};

    Vec y(ntotal, 0.0);
    for (int i = 0; i < m; ++i) y[t.basis[i]] = t.b[i];
    LpResult res;
    res.status = LpStatus::Optimal;
    res.x.assign(nv, 0.0);
    for (int j = 0; j < nv; ++j) {
        double v = y[col_pos[j]];
        if (col_neg[j] >= 0) v -= y[col_neg[j]];
        res.x[j] = v + shift[j];
    }
    res.objective = dot(res.x, p.objective);
    return res;
}

}  // namespace lscape
