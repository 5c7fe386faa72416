#pragma once

#include "lscape/clarke.hpp"

namespace lscape {

struct SeparatingHyperplane {
    Vec q;            // unit normal
    double beta = 0.0;
    double margin = 0.0;  // m > 0: <q, y x> + beta y >= m for all points
};

/// Margin maximization over |q|_inf <= 1, renormalized to unit Euclidean q.
/// Returns nullopt when the best achievable margin is not positive.
std::optional<SeparatingHyperplane> separability(const LabeledDataset& data);

struct RareWitness {
    Vec lambdas;   // per point, in {1, alpha, ..., alpha^L}
    Matrix eps;    // N x R indicators in {0,1}; entries of the true class unused
};

struct GenericityVerdict {
    bool generic = true;
    std::optional<RareWitness> witness;
};

/// Exhaustive search for a nonzero indicator assignment satisfying the
/// error-moment balance system. Binary datasets are viewed as two-class
/// one-hot for this purpose. Throws budget_exceeded when
/// (depth+1)^N * 2^(N R) > 2^24.
GenericityVerdict genericity(const LabeledDataset& data, double alpha, int depth);

bool equal_class_weights(const LabeledDataset& data, double tol = 1e-12);

/// Hull-averaged per-point activation weights rho_{ik} =
/// sum_u theta_u mu_i gate_i(u) slope_{ik}(u); binary one-hidden-layer mode.
Matrix hull_activation_weights(const CriticalityCertificate& cert, const Params& p,
                               const LabeledDataset& data);

struct Verdict {
    bool passed = false;
    std::string detail;
};

/// At a critical point of the leaky one-hidden-layer loss on separable data,
/// either v vanishes or the point is a global minimum (zero loss).
Verdict leaky_critical_check(const Params& p, const LabeledDataset& data,
                             const CriticalityResult& crit);

struct BlindSideViolation {
    int point = 0;
    int unit = 0;
    double preactivation = 0.0;
    double v = 0.0;
};
struct BlindSideReport {
    bool passed = false;
    std::vector<BlindSideViolation> violations;
};

/// At a ReLU critical point, every unsolved data point lies on the blind side
/// of every active hidden unit.
BlindSideReport blind_side_check(const Params& p, const LabeledDataset& data,
                                 const CriticalityResult& crit, double tau = kDefaultTau);

enum class MinimumKind { FlatTypeI, SharpTypeII, NotMinimum, Inconclusive };
const char* to_string(MinimumKind k);

struct MinimumClassification {
    MinimumKind kind = MinimumKind::Inconclusive;
    CriticalityCertificate certificate;
    std::vector<CellId> flat_cells;
    std::string detail;
};

struct ClassifyOptions {
    double tau = kDefaultTau;
    int max_zeros = kDefaultMaxZeros;
    double eps_crit = -1.0;        // scale-aware default
    int search_samples = 1000;     // split over radii {1e-3, 1e-5}
    double improvement_tol = 1e-9;
    std::uint64_t seed = 12345;
};

MinimumClassification classify_minimum(const Params& p, const LabeledDataset& data,
                                       const ClassifyOptions& opts = {});

/// Structured perturbation along a separating hyperplane with a guaranteed
/// loss decrease of at least first_order * t + second_order * t^2 while the
/// ray stays in the entered cell.
struct DescentProbe {
    Vec direction;                // flat delta per unit step
    double first_order = 0.0;
    double second_order = 0.0;
    Vec eval_t;                   // step sizes probed empirically
    Vec empirical_decrease;       // base loss minus loss along the ray
};

DescentProbe descent_probe(const Params& p, const LabeledDataset& data,
                           const SeparatingHyperplane& hp, int which, int unit);

/// Deep linear regime: at critical points with nonzero end-to-end weight
/// vector, the loss must match the optimum of the convex reparametrized
/// problem (solved exactly as an LP).
Verdict deep_linear_check(const Params& p, const LabeledDataset& data,
                          const CriticalityResult& crit, std::uint64_t seed = 904);

/// Optimum of the convex hinge problem min_w,c sum mu_i max(0, 1 - y_i(<w,x_i>+c)).
double convex_hinge_optimum(const LabeledDataset& data);

}  // namespace lscape
