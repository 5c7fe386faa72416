#pragma once

#include "lscape/landscape.hpp"

namespace lscape {

/// One copy of the hidden-layer parameters per class, plus per-class output
/// heads and a penalty strength coupling the replicas to their mean.
struct ReplicatedParams {
    NetworkShape shape;     // output_dim = number of classes
    double gamma = 1.0;
    std::vector<std::vector<Matrix>> W;  // [class][layer]
    std::vector<std::vector<Vec>> b;     // [class][layer]
    Matrix V;                            // R x d_L, row r is the class-r head
    Vec c;                               // length R

    static ReplicatedParams zeros(const NetworkShape& s, double gamma);
    static ReplicatedParams random(const NetworkShape& s, double gamma, double half_width,
                                   std::mt19937_64& rng);

    int num_classes() const { return shape.output_dim; }
    /// Binary one-output network of class r: replica r's hidden layers + head r.
    Params class_params(int r) const;
    /// Same, but with the hidden layers replaced by the replica means.
    Params mean_class_params(int r) const;
    std::vector<Matrix> mean_W() const;
    std::vector<Vec> mean_b() const;

    int flat_size() const;
    Vec flatten() const;
    void unflatten(const Vec& flat);
};

/// Coupling penalty R/(R-1) sum_{l,r} |W^(l,r) - mean|^2 + |b^(l,r) - mean|^2.
double replica_penalty(const ReplicatedParams& reps);

/// Penalized objective: sum of per-class one-versus-all losses, each class
/// evaluated through its own replica, plus gamma times the coupling penalty.
double penalized_loss(const ReplicatedParams& reps, const LabeledDataset& data,
                      const Matrix* per_class_weights = nullptr);

/// Clarke-subdifferential generators of the penalized objective: one per
/// product cell (Cartesian product of per-class incidence sets, capped), each
/// equal to the per-class frozen gradients plus the smooth penalty gradient.
std::vector<Vec> penalized_generators(const ReplicatedParams& reps, const LabeledDataset& data,
                                      double tau = kDefaultTau, int cell_cap = 4096,
                                      const Matrix* per_class_weights = nullptr);

struct PenaltyCriticality {
    bool critical = false;
    double residual_norm = 0.0;
    Vec residual;
    Vec theta;
    double eps_used = 0.0;
};

PenaltyCriticality penalized_critical(const ReplicatedParams& reps, const LabeledDataset& data,
                                      double eps_crit = 1e-6, double tau = kDefaultTau,
                                      int cell_cap = 4096,
                                      const Matrix* per_class_weights = nullptr);

/// Exactness of the penalty at a critical point: replicas agree with their
/// mean, and the mean parameters are per-class Clarke critical.
struct ExactnessReport {
    bool passed = false;
    double max_deviation = 0.0;
    double deviation_tol = 0.0;
    Vec per_class_residuals;
    double residual_tol = 0.0;
};

ExactnessReport penalty_exactness_check(const ReplicatedParams& reps, const LabeledDataset& data,
                                        const PenaltyCriticality& crit,
                                        double residual_tol = 1e-5,
                                        const Matrix* per_class_weights = nullptr);

/// ReLU multiclass structure at critical points: a class-r-unsolved point
/// never activates a unit that class r's head actually uses.
struct MulticlassBlindSideReport {
    bool passed = false;
    struct Violation {
        int point = 0;
        int cls = 0;
        int unit = 0;
        double value = 0.0;
    };
    std::vector<Violation> violations;
};

MulticlassBlindSideReport multiclass_blind_side_check(const ReplicatedParams& reps,
                                                      const LabeledDataset& data,
                                                      const PenaltyCriticality& crit,
                                                      const Matrix* per_class_weights = nullptr);

}  // namespace lscape
