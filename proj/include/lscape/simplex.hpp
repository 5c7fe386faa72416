#pragma once

#include "lscape/linalg.hpp"

namespace lscape {

enum class Rel { LE, GE, EQ };

/// Small dense linear program: minimize c^T x subject to row constraints.
/// Variables carry finite or infinite box bounds; free variables are split
/// internally. Intended for desk-scale problems (tens of rows/columns).
struct LpProblem {
    int num_vars = 0;
    Vec objective;                    // length num_vars
    std::vector<Vec> rows;            // each length num_vars
    std::vector<Rel> rels;
    Vec rhs;
    Vec lower;                        // -inf allowed
    Vec upper;                        // +inf allowed

    explicit LpProblem(int n);
    void add_row(const Vec& coeffs, Rel rel, double b);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double objective = 0.0;
};

LpResult solve_lp(const LpProblem& p);

}  // namespace lscape
