#include "lscape/penalty.hpp"

#include <cmath>

namespace lscape {

namespace {

NetworkShape class_shape(const NetworkShape& s) {
    NetworkShape cs = s;
    cs.output_dim = 1;
    return cs;
}

}  // namespace

ReplicatedParams ReplicatedParams::zeros(const NetworkShape& s, double gamma) {
    s.validate();
    if (s.output_dim < 2) throw shape_error("replicated parameters need R >= 2");
    if (!(gamma > 0.0)) throw shape_error("penalty strength must be positive");
    ReplicatedParams r;
    r.shape = s;
    r.gamma = gamma;
    for (int cls = 0; cls < s.output_dim; ++cls) {
        std::vector<Matrix> Ws;
        std::vector<Vec> bs;
        for (int l = 1; l <= s.depth(); ++l) {
            Ws.emplace_back(s.layer_dim(l), s.layer_dim(l - 1));
            bs.emplace_back(s.layer_dim(l), 0.0);
        }
        r.W.push_back(std::move(Ws));
        r.b.push_back(std::move(bs));
    }
    r.V = Matrix(s.output_dim, s.layer_dim(s.depth()));
    r.c.assign(s.output_dim, 0.0);
    return r;
}

ReplicatedParams ReplicatedParams::random(const NetworkShape& s, double gamma, double half_width,
                                          std::mt19937_64& rng) {
    ReplicatedParams r = zeros(s, gamma);
    for (auto& Ws : r.W)
        for (auto& w : Ws)
            for (double& v : w.data) v = uniform(rng, -half_width, half_width);
    for (auto& bs : r.b)
        for (auto& bb : bs)
            for (double& v : bb) v = uniform(rng, -half_width, half_width);
    for (double& v : r.V.data) v = uniform(rng, -half_width, half_width);
    if (s.output_bias)
        for (double& v : r.c) v = uniform(rng, -half_width, half_width);
    return r;
}

Params ReplicatedParams::class_params(int r) const {
    Params p = Params::zeros(class_shape(shape));
    p.W = W[r];
    p.b = b[r];
    for (int j = 0; j < V.cols; ++j) p.V(0, j) = V(r, j);
    p.c[0] = c[r];
    return p;
}

std::vector<Matrix> ReplicatedParams::mean_W() const {
    std::vector<Matrix> m;
    const int R = num_classes();
    for (int l = 0; l < shape.depth(); ++l) {
        Matrix avg = W[0][l];
        for (int r = 1; r < R; ++r)
            for (size_t k = 0; k < avg.data.size(); ++k) avg.data[k] += W[r][l].data[k];
        for (double& v : avg.data) v /= R;
        m.push_back(std::move(avg));
    }
    return m;
}

std::vector<Vec> ReplicatedParams::mean_b() const {
    std::vector<Vec> m;
    const int R = num_classes();
    for (int l = 0; l < shape.depth(); ++l) {
        Vec avg = b[0][l];
        for (int r = 1; r < R; ++r) axpy(1.0, b[r][l], avg);
        for (double& v : avg) v /= R;
        m.push_back(std::move(avg));
    }
    return m;
}

Params ReplicatedParams::mean_class_params(int r) const {
    Params p = class_params(r);
    p.W = mean_W();
    p.b = mean_b();
    return p;
}

int ReplicatedParams::flat_size() const {
    int n = 0;
    for (const auto& Ws : W)
        for (const auto& w : Ws) n += int(w.data.size());
    for (const auto& bs : b)
        for (const auto& bb : bs) n += int(bb.size());
    n += int(V.data.size());
    if (shape.output_bias) n += int(c.size());
    return n;
}

Vec ReplicatedParams::flatten() const {
    Vec f;
    f.reserve(flat_size());
    for (int r = 0; r < num_classes(); ++r) {
        for (int l = 0; l < shape.depth(); ++l) {
            f.insert(f.end(), W[r][l].data.begin(), W[r][l].data.end());
            f.insert(f.end(), b[r][l].begin(), b[r][l].end());
        }
    }
    f.insert(f.end(), V.data.begin(), V.data.end());
    if (shape.output_bias) f.insert(f.end(), c.begin(), c.end());
    return f;
}

void ReplicatedParams::unflatten(const Vec& flat) {
    if (int(flat.size()) != flat_size()) throw shape_error("flat vector size mismatch");
    size_t k = 0;
    for (int r = 0; r < num_classes(); ++r) {
        for (int l = 0; l < shape.depth(); ++l) {
            for (double& v : W[r][l].data) v = flat[k++];
            for (double& v : b[r][l]) v = flat[k++];
        }
    }
    for (double& v : V.data) v = flat[k++];
    if (shape.output_bias)
        for (double& v : c) v = flat[k++];
}

double replica_penalty(const ReplicatedParams& reps) {
    const int R = reps.num_classes();
    if (R < 2) throw shape_error("penalty needs R >= 2");
    std::vector<Matrix> mw = reps.mean_W();
    std::vector<Vec> mb = reps.mean_b();
    double s = 0.0;
    for (int l = 0; l < reps.shape.depth(); ++l) {
        for (int r = 0; r < R; ++r) {
            for (size_t k = 0; k < mw[l].data.size(); ++k) {
                double d = reps.W[r][l].data[k] - mw[l].data[k];
                s += d * d;
            }
            for (size_t k = 0; k < mb[l].size(); ++k) {
                double d = reps.b[r][l][k] - mb[l][k];
                s += d * d;
            }
        }
    }
    return s * double(R) / double(R - 1);
}

double penalized_loss(const ReplicatedParams& reps, const LabeledDataset& data,
                      const Matrix* per_class_weights) {
    if (data.mode != LabelMode::MultiClass)
        throw unsupported_configuration("penalized objective needs multiclass data");
    if (data.num_classes != reps.num_classes()) throw shape_error("class count mismatch");
    double s = 0.0;
    for (int r = 0; r < reps.num_classes(); ++r) {
        LabeledDataset slice = one_vs_rest(data, r, per_class_weights);
        s += total_loss(reps.class_params(r), slice);
    }
    return s + reps.gamma * replica_penalty(reps);
}

namespace {

// Gradient of gamma * replica_penalty in ReplicatedParams::flatten layout.
Vec penalty_gradient(const ReplicatedParams& reps) {
    const int R = reps.num_classes();
    std::vector<Matrix> mw = reps.mean_W();
    std::vector<Vec> mb = reps.mean_b();
    double scale = 2.0 * reps.gamma * double(R) / double(R - 1);
    Vec g(reps.flat_size(), 0.0);
    size_t k = 0;
    for (int r = 0; r < R; ++r) {
        for (int l = 0; l < reps.shape.depth(); ++l) {
            for (size_t j = 0; j < mw[l].data.size(); ++j)
                g[k++] = scale * (reps.W[r][l].data[j] - mw[l].data[j]);
            for (size_t j = 0; j < mb[l].size(); ++j)
                g[k++] = scale * (reps.b[r][l][j] - mb[l][j]);
        }
    }
    return g;  // head entries stay zero
}

// Scatter a class-r gradient (binary Params layout) into the replicated layout.
void scatter_class_gradient(Vec& dst, const Vec& src, const ReplicatedParams& reps, int r) {
    int hidden_per_class = 0;
    for (int l = 0; l < reps.shape.depth(); ++l)
        hidden_per_class += int(reps.W[r][l].data.size()) + int(reps.b[r][l].size());
    size_t src_k = 0;
    size_t dst_k = size_t(r) * hidden_per_class;
    for (int q = 0; q < hidden_per_class; ++q) dst[dst_k++] += src[src_k++];
    // head: V row r then c_r
    size_t vbase = size_t(reps.num_classes()) * hidden_per_class;
    const int dl = reps.V.cols;
    for (int j = 0; j < dl; ++j) dst[vbase + size_t(r) * dl + j] += src[src_k++];
    if (reps.shape.output_bias) {
        size_t cbase = vbase + reps.V.data.size();
        dst[cbase + r] += src[src_k++];
    }
}

}  // namespace

std::vector<Vec> penalized_generators(const ReplicatedParams& reps, const LabeledDataset& data,
                                      double tau, int cell_cap,
                                      const Matrix* per_class_weights) {
    const int R = reps.num_classes();
    std::vector<std::vector<Vec>> class_grads(R);  // per class, per incident cell
    std::uint64_t combos = 1;
    for (int r = 0; r < R; ++r) {
        LabeledDataset slice = one_vs_rest(data, r, per_class_weights);
        Params cp = reps.class_params(r);
        for (auto& [u, g] : clarke_generators(cp, slice, tau)) class_grads[r].push_back(g);
        combos *= class_grads[r].size();
        if (combos > std::uint64_t(cell_cap))
            throw budget_exceeded(double(combos), double(cell_cap));
    }
    Vec pen = penalty_gradient(reps);
    std::vector<Vec> gens;
    std::vector<size_t> idx(R, 0);
    while (true) {
        Vec g = pen;
        for (int r = 0; r < R; ++r) scatter_class_gradient(g, class_grads[r][idx[r]], reps, r);
        gens.push_back(std::move(g));
        int r = 0;
        for (; r < R; ++r) {
            if (++idx[r] < class_grads[r].size()) break;
            idx[r] = 0;
        }
        if (r == R) break;
    }
    return gens;
}

PenaltyCriticality penalized_critical(const ReplicatedParams& reps, const LabeledDataset& data,
                                      double eps_crit, double tau, int cell_cap,
                                      const Matrix* per_class_weights) {
    std::vector<Vec> gens = penalized_generators(reps, data, tau, cell_cap, per_class_weights);
    MinNormResult mn = min_norm_point(gens);
    PenaltyCriticality out;
    out.residual_norm = mn.norm;
    out.residual = mn.point;
    out.theta = mn.theta;
    out.eps_used = eps_crit;
    out.critical = mn.converged && mn.norm <= eps_crit;
    return out;
}

ExactnessReport penalty_exactness_check(const ReplicatedParams& reps, const LabeledDataset& data,
                                        const PenaltyCriticality& crit, double residual_tol,
                                        const Matrix* per_class_weights) {
    if (!crit.critical)
        throw precondition_error("penalty exactness check needs a critical point of the penalized objective");
    const int R = reps.num_classes();
    std::vector<Matrix> mw = reps.mean_W();
    std::vector<Vec> mb = reps.mean_b();

    ExactnessReport rep;
    double mean_norm_sq = 0.0;
    for (const auto& w : mw)
        for (double v : w.data) mean_norm_sq += v * v;
    for (const auto& bb : mb)
        for (double v : bb) mean_norm_sq += v * v;
    rep.deviation_tol = 1e-5 * (1.0 + std::sqrt(mean_norm_sq));

    for (int l = 0; l < reps.shape.depth(); ++l) {
        for (int r = 0; r < R; ++r) {
            double dw = 0.0, db = 0.0;
            for (size_t k = 0; k < mw[l].data.size(); ++k) {
                double d = reps.W[r][l].data[k] - mw[l].data[k];
                dw += d * d;
            }
            for (size_t k = 0; k < mb[l].size(); ++k) {
                double d = reps.b[r][l][k] - mb[l][k];
                db += d * d;
            }
            rep.max_deviation = std::max(rep.max_deviation, std::sqrt(dw) + std::sqrt(db));
        }
    }

    rep.residual_tol = residual_tol;
    bool classes_ok = true;
    for (int r = 0; r < R; ++r) {
        LabeledDataset slice = one_vs_rest(data, r, per_class_weights);
        CriticalityResult cr = is_critical(reps.mean_class_params(r), slice, residual_tol);
        rep.per_class_residuals.push_back(cr.certificate.residual_norm);
        classes_ok = classes_ok && cr.critical;
    }
    rep.passed = rep.max_deviation <= rep.deviation_tol && classes_ok;
    return rep;
}

MulticlassBlindSideReport multiclass_blind_side_check(const ReplicatedParams& reps,
                                                      const LabeledDataset& data,
                                                      const PenaltyCriticality& crit,
                                                      const Matrix* per_class_weights) {
    if (reps.shape.alpha != 0.0)
        throw precondition_error("multiclass blind side check needs alpha = 0");
    if (reps.shape.depth() != 1)
        throw precondition_error("multiclass blind side check needs one hidden layer");
    if (!crit.critical)
        throw precondition_error("multiclass blind side check needs a critical point");
    for (int r = 0; r < reps.num_classes(); ++r) {
        if (!separability(one_vs_rest(data, r, per_class_weights)))
            throw precondition_error("multiclass blind side check needs per-class separable data");
    }

    MulticlassBlindSideReport rep;
    rep.passed = true;
    const int K = reps.shape.hidden[0];
    for (int r = 0; r < reps.num_classes(); ++r) {
        LabeledDataset slice = one_vs_rest(data, r, per_class_weights);
        Params cp = reps.class_params(r);
        for (int i = 0; i < data.size(); ++i) {
            if (point_loss(cp, slice, i) <= 1e-9) continue;
            for (int k = 0; k < K; ++k) {
                double pre = cp.b[0][k];
                for (int j = 0; j < data.dim(); ++j) pre += cp.W[0](k, j) * data.points[i][j];
                double val = std::fabs(cp.V(0, k)) * std::max(0.0, pre);
                if (val > 1e-9) {
                    rep.passed = false;
                    rep.violations.push_back({i, r, k, val});
                }
            }
        }
    }
    return rep;
}

}  // namespace lscape
