#pragma once

#include <map>
#include <variant>

#include "lscape/penalty.hpp"

namespace lscape {

struct Schedule {
    enum class Kind { Constant, InvSqrt };
    Kind kind = Kind::InvSqrt;
    double eta0 = 0.5;
    double step(int j) const;
};

enum class ObjectiveKind { Binary, Multiclass, Penalty };

struct DescentOptions {
    Schedule schedule;
    int max_iters = 10000;
    double eps_crit = 1e-6;
    int check_every = 100;       // criticality residual cadence
    double divergence_guard = 1e6;
    double tau = kDefaultTau;
    int max_zeros = kDefaultMaxZeros;
    bool record_iterates = false;  // keep every check_every-th iterate
};

/// Deterministic subgradient descent record: losses, step sizes, per-step
/// cell occupancy, and the final criticality certificate when the run
/// early-stopped.
struct Trajectory {
    std::vector<double> losses;
    std::vector<double> step_sizes;
    std::vector<std::uint64_t> cells;
    std::vector<Vec> iterates;

    int iters = 0;
    bool early_stopped = false;
    bool diverged = false;
    double final_loss = 0.0;
    double final_residual = std::numeric_limits<double>::infinity();
    std::variant<Params, ReplicatedParams> final_params;
    std::optional<CriticalityResult> certificate;         // binary / multiclass
    std::optional<PenaltyCriticality> penalty_certificate;

    /// Fraction of recorded steps spent in each visited cell; sums to one.
    std::map<std::uint64_t, double> occupancy() const;
    std::uint64_t digest() const;
};

Trajectory subgradient_descent(ObjectiveKind kind, const LabeledDataset& data, Params init,
                               const DescentOptions& opts);
Trajectory subgradient_descent_penalty(const LabeledDataset& data, ReplicatedParams init,
                                       const DescentOptions& opts);

struct MultiStartOptions {
    DescentOptions descent;
    int n_starts = 1;
    double init_scale = 1.0;
    std::uint64_t seed = 0;
    int max_threads = 0;  // 0: hardware default
};

/// Independent seeded runs, sorted by final loss.
std::vector<Trajectory> multi_start(ObjectiveKind kind, const LabeledDataset& data,
                                    const NetworkShape& shape, double gamma,
                                    const MultiStartOptions& opts);

}  // namespace lscape
