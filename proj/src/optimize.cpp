#include "lscape/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace lscape {

double Schedule::step(int j) const {
    return kind == Kind::Constant ? eta0 : eta0 / std::sqrt(double(j + 1));
}

std::map<std::uint64_t, double> Trajectory::occupancy() const {
    std::map<std::uint64_t, double> occ;
    if (cells.empty()) return occ;
    for (std::uint64_t h : cells) occ[h] += 1.0;
    for (auto& [h, v] : occ) v /= double(cells.size());
    return occ;
}

std::uint64_t Trajectory::digest() const {
    Hash64 h;
    for (double v : losses) h.add_double(v);
    for (std::uint64_t c : cells) h.add(c);
    Vec flat = std::holds_alternative<Params>(final_params)
                   ? std::get<Params>(final_params).flatten()
                   : std::get<ReplicatedParams>(final_params).flatten();
    for (double v : flat) h.add_double(v);
    h.add(std::uint64_t(iters));
    return h.get();
}

namespace {

// Step generator at the current point: zero signature entries are resolved to
// the active (+1) side, then the frozen cell gradient is used.
struct StepInfo {
    Vec gradient;
    std::uint64_t cell_hash;
};

StepInfo tie_broken_gradient(const Params& p, const LabeledDataset& data, double tau) {
    Signature sig = signature(p, data, tau);
    std::vector<std::int8_t> signs = sig.s;
    for (std::int8_t& v : signs)
        if (v == 0) v = 1;
    CellId u = cell_from_signs(std::move(signs));
    FrozenActivation f = frozen_from_cell(u, p.shape);
    return {cell_gradient(p, f, data), u.hash};
}

StepInfo tie_broken_gradient_penalty(const ReplicatedParams& reps, const LabeledDataset& data,
                                     double tau) {
    Vec g(reps.flat_size(), 0.0);
    Hash64 combo;
    // data parts per class
    const int R = reps.num_classes();
    std::vector<Matrix> mw = reps.mean_W();
    std::vector<Vec> mb = reps.mean_b();
    double scale = 2.0 * reps.gamma * double(R) / double(R - 1);
    size_t k = 0;
    for (int r = 0; r < R; ++r) {
        for (int l = 0; l < reps.shape.depth(); ++l) {
            for (size_t j = 0; j < mw[l].data.size(); ++j)
                g[k++] = scale * (reps.W[r][l].data[j] - mw[l].data[j]);
            for (size_t j = 0; j < mb[l].size(); ++j)
                g[k++] = scale * (reps.b[r][l][j] - mb[l][j]);
        }
    }
    int hidden_per_class = 0;
    for (int l = 0; l < reps.shape.depth(); ++l)
        hidden_per_class +=
            int(reps.W[0][l].data.size()) + int(reps.b[0][l].size());
    size_t vbase = size_t(R) * hidden_per_class;
    for (int r = 0; r < R; ++r) {
        LabeledDataset slice = one_vs_rest(data, r);
        Params cp = reps.class_params(r);
        StepInfo si = tie_broken_gradient(cp, slice, tau);
        combo.add(si.cell_hash);
        size_t src = 0;
        size_t dst = size_t(r) * hidden_per_class;
        for (int q = 0; q < hidden_per_class; ++q) g[dst++] += si.gradient[src++];
        const int dl = reps.V.cols;
        for (int j = 0; j < dl; ++j) g[vbase + size_t(r) * dl + j] += si.gradient[src++];
        if (reps.shape.output_bias) {
            size_t cbase = vbase + reps.V.data.size();
            g[cbase + r] += si.gradient[src++];
        }
    }
    return {std::move(g), combo.get()};
}

}  // namespace

Trajectory subgradient_descent(ObjectiveKind kind, const LabeledDataset& data, Params init,
                               const DescentOptions& opts) {
    if (kind == ObjectiveKind::Penalty)
        throw unsupported_configuration("penalty objective needs replicated parameters");
    if (kind == ObjectiveKind::Binary && data.mode != LabelMode::Binary)
        throw shape_error("binary objective needs binary data");
    if (kind == ObjectiveKind::Multiclass && data.mode != LabelMode::MultiClass)
        throw shape_error("multiclass objective needs multiclass data");

    Trajectory traj;
    Params p = std::move(init);
    Vec flat = p.flatten();
    for (int j = 0; j < opts.max_iters; ++j) {
        double loss = total_loss(p, data);
        if (loss > opts.divergence_guard) {
            traj.diverged = true;
            break;
        }
        StepInfo si = tie_broken_gradient(p, data, opts.tau);
        traj.losses.push_back(loss);
        traj.cells.push_back(si.cell_hash);
        double dt = opts.schedule.step(j);
        traj.step_sizes.push_back(dt);
        ++traj.iters;

        if (j % opts.check_every == 0) {
            if (opts.record_iterates) traj.iterates.push_back(flat);
            CriticalityResult cr = is_critical(p, data, opts.eps_crit, opts.tau, opts.max_zeros);
            if (cr.critical) {
                traj.early_stopped = true;
                traj.certificate = cr;
                traj.final_residual = cr.certificate.residual_norm;
                break;
            }
        }
        axpy(-dt, si.gradient, flat);
        p.unflatten(flat);
    }
    traj.final_loss = total_loss(p, data);
    if (!traj.certificate) {
        CriticalityResult cr = is_critical(p, data, opts.eps_crit, opts.tau, opts.max_zeros);
        traj.certificate = cr;
        traj.final_residual = cr.certificate.residual_norm;
    }
    traj.final_params = std::move(p);
    return traj;
}

Trajectory subgradient_descent_penalty(const LabeledDataset& data, ReplicatedParams init,
                                       const DescentOptions& opts) {
    Trajectory traj;
    ReplicatedParams reps = std::move(init);
    Vec flat = reps.flatten();
    for (int j = 0; j < opts.max_iters; ++j) {
        double loss = penalized_loss(reps, data);
        if (loss > opts.divergence_guard) {
            traj.diverged = true;
            break;
        }
        StepInfo si = tie_broken_gradient_penalty(reps, data, opts.tau);
        traj.losses.push_back(loss);
        traj.cells.push_back(si.cell_hash);
        double dt = opts.schedule.step(j);
        traj.step_sizes.push_back(dt);
        ++traj.iters;

        if (j % opts.check_every == 0) {
            if (opts.record_iterates) traj.iterates.push_back(flat);
            PenaltyCriticality pc = penalized_critical(reps, data, opts.eps_crit, opts.tau);
            if (pc.critical) {
                traj.early_stopped = true;
                traj.penalty_certificate = pc;
                traj.final_residual = pc.residual_norm;
                break;
            }
        }
        axpy(-dt, si.gradient, flat);
        reps.unflatten(flat);
    }
    traj.final_loss = penalized_loss(reps, data);
    if (!traj.penalty_certificate) {
        PenaltyCriticality pc = penalized_critical(reps, data, opts.eps_crit, opts.tau);
        traj.penalty_certificate = pc;
        traj.final_residual = pc.residual_norm;
    }
    traj.final_params = std::move(reps);
    return traj;
}

std::vector<Trajectory> multi_start(ObjectiveKind kind, const LabeledDataset& data,
                                    const NetworkShape& shape, double gamma,
                                    const MultiStartOptions& opts) {
    if (opts.n_starts < 1) throw shape_error("multi_start needs at least one start");
    std::vector<Trajectory> runs(opts.n_starts);
    parallel_for(
        opts.n_starts,
        [&](int i) {
            std::mt19937_64 rng(mix64(opts.seed + std::uint64_t(i)));
            if (kind == ObjectiveKind::Penalty) {
                ReplicatedParams init =
                    ReplicatedParams::random(shape, gamma, opts.init_scale, rng);
                runs[i] = subgradient_descent_penalty(data, std::move(init), opts.descent);
            } else {
                Params init = Params::random(shape, opts.init_scale, rng);
                runs[i] = subgradient_descent(kind, data, std::move(init), opts.descent);
            }
        },
        opts.max_threads);
    std::stable_sort(runs.begin(), runs.end(),
                     [](const Trajectory& a, const Trajectory& b) {
                         return a.final_loss < b.final_loss;
                     });
    return runs;
}

}  // namespace lscape
