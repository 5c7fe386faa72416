#pragma once

#include "lscape/multilinear.hpp"

namespace lscape {

/// Simplex weights over adjacent-cell gradients together with the resulting
/// minimum-norm element of the Clarke subdifferential.
struct CriticalityCertificate {
    std::vector<CellId> cells;
    Vec theta;          // nonnegative, sums to one
    Vec residual;       // sum_u theta_u grad_u, flat layout
    double residual_norm = 0.0;
};

/// One generator per cell in the incidence set: the cell gradient under that
/// cell's frozen activation, evaluated at the given point.
std::vector<std::pair<CellId, Vec>> clarke_generators(const Params& p, const LabeledDataset& data,
                                                      double tau = kDefaultTau,
                                                      int max_zeros = kDefaultMaxZeros);

struct MinNormResult {
    Vec theta;
    Vec point;          // minimizer of |sum theta_u g_u| over the simplex
    double norm = 0.0;
    bool converged = true;
    int major_cycles = 0;
};

/// Minimum-norm point of the convex hull of a finite generator set
/// (Wolfe's active-set method with affine minimization). On non-convergence
/// after 10^4 major cycles the best iterate is returned with converged=false.
MinNormResult min_norm_point(const std::vector<Vec>& generators, double tol = 1e-12);

struct CriticalityResult {
    bool critical = false;
    CriticalityCertificate certificate;
    double eps_used = 0.0;
};

/// Clarke criticality test: minimum norm over the hull of adjacent-cell
/// gradients at most eps_crit. Negative eps_crit selects the scale-aware
/// default 1e-6 * (1 + median generator norm).
CriticalityResult is_critical(const Params& p, const LabeledDataset& data, double eps_crit = -1.0,
                              double tau = kDefaultTau, int max_zeros = kDefaultMaxZeros);

}  // namespace lscape
