#include "lscape/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lscape/simplex.hpp"

namespace lscape {

std::optional<SeparatingHyperplane> separability(const LabeledDataset& data) {
    if (data.mode != LabelMode::Binary)
        throw unsupported_configuration("separability is a binary-label notion");
    const int d = data.dim();
    double bigb = 1.0;
    for (const Vec& x : data.points) {
        double s = 0.0;
        for (double v : x) s += std::fabs(v);
        bigb = std::max(bigb, 1.0 + s);
    }
    // variables: q_1..q_d in [-1,1], beta in [-B,B], m free
    LpProblem lp(d + 2);
    for (int j = 0; j < d; ++j) {
        lp.lower[j] = -1.0;
        lp.upper[j] = 1.0;
    }
    lp.lower[d] = -bigb;
    lp.upper[d] = bigb;
    lp.lower[d + 1] = -std::numeric_limits<double>::infinity();
    lp.objective[d + 1] = -1.0;  // maximize m
    for (int i = 0; i < data.size(); ++i) {
        Vec row(d + 2, 0.0);
        double y = data.label_sign(i);
        for (int j = 0; j < d; ++j) row[j] = y * data.points[i][j];
        row[d] = y;
        row[d + 1] = -1.0;
        lp.add_row(row, Rel::GE, 0.0);
    }
    LpResult res = solve_lp(lp);
    if (res.status != LpStatus::Optimal)
        throw precondition_error("separability margin LP did not solve");
    if (res.x[d + 1] <= 1e-9) return std::nullopt;

    Vec q(res.x.begin(), res.x.begin() + d);
    double beta = res.x[d];
    double qn = norm2(q);
    if (qn < 1e-12) {
        // one-class data: any hyperplane far enough separates
        int sgn = data.label_sign(0);
        q.assign(d, 0.0);
        q[0] = 1.0;
        double extent = 0.0;
        for (const Vec& x : data.points) extent = std::max(extent, std::fabs(x[0]));
        beta = sgn * (1.0 + extent);
    } else {
        for (double& v : q) v /= qn;
        beta /= qn;
    }
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < data.size(); ++i) {
        double y = data.label_sign(i);
        m = std::min(m, y * (dot(q, data.points[i]) + beta));
    }
    if (m <= 1e-9) return std::nullopt;
    return SeparatingHyperplane{q, beta, m};
}

namespace {

LabeledDataset as_onehot(const LabeledDataset& data) {
    if (data.mode == LabelMode::MultiClass) return data;
    LabeledDataset d = data;
    d.mode = LabelMode::MultiClass;
    d.num_classes = 2;
    for (int i = 0; i < d.size(); ++i) d.labels[i] = data.label_sign(i) > 0 ? 0 : 1;
    return d;
}

}  // namespace

GenericityVerdict genericity(const LabeledDataset& data, double alpha, int depth) {
    LabeledDataset oh = as_onehot(data);
    const int N = oh.size(), R = oh.num_classes;
    double budget = std::pow(double(depth + 1), N) * std::pow(2.0, double(N) * R);
    if (budget > double(1 << 24)) throw budget_exceeded(budget, double(1 << 24));

    Vec slope_values;
    for (int j = 0; j <= depth; ++j) {
        double v = std::pow(alpha, j);
        bool dup = false;
        for (double u : slope_values) dup = dup || u == v;
        if (!dup) slope_values.push_back(v);
    }
    const int nv = int(slope_values.size());

    // free indicator slots: wrong-class entries only
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < N; ++i)
        for (int r = 0; r < R; ++r)
            if (r != oh.class_of(i)) slots.emplace_back(i, r);
    const int M = int(slots.size());

    Matrix eps(N, R, 0.0);
    Vec lambdas(N, 1.0);
    for (std::uint64_t mask = 1; mask < (1ull << M); ++mask) {
        for (double& v : eps.data) v = 0.0;
        for (int s = 0; s < M; ++s)
            if ((mask >> s) & 1ull) eps(slots[s].first, slots[s].second) = 1.0;
        std::uint64_t total = 1;
        for (int i = 0; i < N; ++i) total *= nv;
        for (std::uint64_t li = 0; li < total; ++li) {
            std::uint64_t t = li;
            for (int i = 0; i < N; ++i) {
                lambdas[i] = slope_values[t % nv];
                t /= nv;
            }
            MomentBalance r = error_moment_residuals(oh, eps, lambdas);
            if (r.vector_family <= 1e-10 && r.slope_family <= 1e-10) {
                GenericityVerdict v;
                v.generic = false;
                v.witness = RareWitness{lambdas, eps};
                return v;
            }
        }
    }
    return {};
}

bool equal_class_weights(const LabeledDataset& data, double tol) {
    if (data.mode != LabelMode::Binary) return false;
    double pos = 0.0, neg = 0.0;
    for (int i = 0; i < data.size(); ++i)
        (data.label_sign(i) > 0 ? pos : neg) += data.weights[i];
    return std::fabs(pos - neg) <= tol;
}

Matrix hull_activation_weights(const CriticalityCertificate& cert, const Params& p,
                               const LabeledDataset& data) {
    if (data.mode != LabelMode::Binary || p.shape.depth() != 1)
        throw unsupported_configuration("hull activation weights need binary one-hidden-layer mode");
    const int N = data.size(), K = p.shape.hidden[0];
    Matrix rho(N, K, 0.0);
    for (size_t u = 0; u < cert.cells.size(); ++u) {
        if (cert.theta[u] == 0.0) continue;
        FrozenActivation f = frozen_from_cell(cert.cells[u], p.shape);
        for (int i = 0; i < N; ++i) {
            double base = cert.theta[u] * data.weights[i] * f.loss_gates[i][0];
            for (int k = 0; k < K; ++k) rho(i, k) += base * f.hidden_slopes[i][0][k];
        }
    }
    return rho;
}

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw precondition_error(what);
}

}  // namespace

Verdict leaky_critical_check(const Params& p, const LabeledDataset& data,
                             const CriticalityResult& crit) {
    require(data.mode == LabelMode::Binary, "leaky critical check needs binary mode");
    require(p.shape.depth() == 1, "leaky critical check needs one hidden layer");
    require(p.shape.alpha > 0.0, "leaky critical check needs alpha > 0");
    require(separability(data).has_value(), "leaky critical check needs separable data");
    require(crit.critical, "leaky critical check needs a critical point");
    double vn = norm2(p.V.data);
    double loss = total_loss(p, data);
    Verdict v;
    if (vn <= 1e-9) {
        v.passed = true;
        v.detail = "output weights vanish";
    } else if (loss <= 1e-6) {
        v.passed = true;
        v.detail = "global minimum (loss " + std::to_string(loss) + ")";
    } else {
        v.passed = false;
        v.detail = "critical point with |v| = " + std::to_string(vn) +
                   " and loss = " + std::to_string(loss);
    }
    return v;
}

BlindSideReport blind_side_check(const Params& p, const LabeledDataset& data,
                                 const CriticalityResult& crit, double tau) {
    require(data.mode == LabelMode::Binary, "blind side check needs binary mode");
    require(p.shape.depth() == 1, "blind side check needs one hidden layer");
    require(p.shape.alpha == 0.0, "blind side check needs alpha = 0");
    require(separability(data).has_value(), "blind side check needs separable data");
    require(crit.critical, "blind side check needs a critical point");
    BlindSideReport rep;
    rep.passed = true;
    const int K = p.shape.hidden[0];
    for (int i = 0; i < data.size(); ++i) {
        if (point_loss(p, data, i) <= 1e-9) continue;
        for (int k = 0; k < K; ++k) {
            double vk = p.V(0, k);
            if (std::fabs(vk) <= 1e-9) continue;
            double pre = p.b[0][k];
            for (int j = 0; j < data.dim(); ++j) pre += p.W[0](k, j) * data.points[i][j];
            if (pre > tau) {
                rep.passed = false;
                rep.violations.push_back({i, k, pre, vk});
            }
        }
    }
    return rep;
}

const char* to_string(MinimumKind k) {
    switch (k) {
        case MinimumKind::FlatTypeI: return "FlatTypeI";
        case MinimumKind::SharpTypeII: return "SharpTypeII";
        case MinimumKind::NotMinimum: return "NotMinimum";
        default: return "Inconclusive";
    }
}

MinimumClassification classify_minimum(const Params& p, const LabeledDataset& data,
                                       const ClassifyOptions& opts) {
    MinimumClassification out;
    CriticalityResult crit = is_critical(p, data, opts.eps_crit, opts.tau, opts.max_zeros);
    out.certificate = crit.certificate;
    if (!crit.critical) {
        out.kind = MinimumKind::NotMinimum;
        out.detail = "not a Clarke critical point (residual " +
                     std::to_string(crit.certificate.residual_norm) + ")";
        return out;
    }

    std::mt19937_64 rng(opts.seed);
    const bool coeff_mode = data.mode == LabelMode::Binary && p.shape.depth() == 1;
    for (const CellId& u : crit.certificate.cells) {
        bool flat = false;
        if (coeff_mode) {
            FrozenActivation f = frozen_from_cell(u, p.shape);
            flat = flat_cell_coeff_test(decompose_one_hidden(data, f), 1e-9);
        } else {
            try {
                flat = flat_cell_sampled_test(p, u, data, 16, rng);
            } catch (const sampling_failed&) {
                flat = false;
            }
        }
        if (flat) out.flat_cells.push_back(u);
    }
    if (!out.flat_cells.empty()) {
        out.kind = MinimumKind::FlatTypeI;
        out.detail = "adjacent or containing cell has constant loss";
        return out;
    }

    const double base_loss = total_loss(p, data);
    Vec base = p.flatten();
    Params work = p;

    // structured descent probes (one-hidden-layer binary separable case)
    if (coeff_mode) {
        auto hp = separability(data);
        if (hp) {
            const int K = p.shape.hidden[0];
            double vnorm = norm_inf(p.V.data);
            for (int k = 0; k < K; ++k) {
                std::vector<int> which;
                if (std::fabs(p.V(0, k)) > 1e-9) which.push_back(1);
                if (vnorm <= 1e-12) {
                    which.push_back(3);
                    if (std::fabs(std::fabs(p.c[0]) - 1.0) > 1e-9) which.push_back(2);
                }
                for (int w : which) {
                    DescentProbe probe = descent_probe(p, data, *hp, w, k);
                    for (size_t t = 0; t < probe.eval_t.size(); ++t) {
                        if (probe.empirical_decrease[t] > opts.improvement_tol) {
                            out.kind = MinimumKind::NotMinimum;
                            out.detail = "descent probe " + std::to_string(w) + " on unit " +
                                         std::to_string(k) + " decreases the loss";
                            return out;
                        }
                    }
                    if (w == 2) {
                        // first-order change is exact two-sided; probe the other sign
                        for (double t : {1e-4, 1e-5, 1e-6}) {
                            Vec cand = base;
                            axpy(-t, probe.direction, cand);
                            work.unflatten(cand);
                            if (base_loss - total_loss(work, data) > opts.improvement_tol) {
                                out.kind = MinimumKind::NotMinimum;
                                out.detail = "descent probe 2 (negative direction) decreases the loss";
                                return out;
                            }
                        }
                    }
                }
            }
        }
    }

    // local random search
    for (double radius : {1e-3, 1e-5}) {
        for (int s = 0; s < opts.search_samples / 2; ++s) {
            Vec cand = base;
            axpy(1.0, ball_point(rng, int(base.size()), radius), cand);
            work.unflatten(cand);
            if (base_loss - total_loss(work, data) > opts.improvement_tol) {
                out.kind = MinimumKind::NotMinimum;
                out.detail = "random search found lower loss at radius " + std::to_string(radius);
                return out;
            }
        }
    }

    Signature sig = signature(p, data, opts.tau);
    if (!sig.smooth()) {
        out.kind = MinimumKind::SharpTypeII;
        out.detail = "critical on the non-smooth set, no adjacent flat cell, no descent found";
    } else {
        out.kind = MinimumKind::Inconclusive;
        out.detail = "smooth critical point of a non-constant cell; no descent found";
    }
    return out;
}

DescentProbe descent_probe(const Params& p, const LabeledDataset& data,
                           const SeparatingHyperplane& hp, int which, int unit) {
    require(data.mode == LabelMode::Binary, "descent probes need binary mode");
    require(p.shape.depth() == 1, "descent probes need one hidden layer");
    require(which >= 1 && which <= 3, "probe index must be 1, 2 or 3");
    const int K = p.shape.hidden[0];
    require(unit >= 0 && unit < K, "unit index out of range");
    if (which >= 2) {
        require(norm_inf(p.V.data) <= 1e-12, "probes 2 and 3 need v = 0");
        if (which == 2)
            require(std::fabs(std::fabs(p.c[0]) - 1.0) > 1e-9, "probe 2 needs c outside {-1,+1}");
    }

    Params delta = Params::zeros(p.shape);
    double sgn = which == 1 ? (p.V(0, unit) > 0 ? 1.0 : (p.V(0, unit) < 0 ? -1.0 : 0.0)) : 1.0;
    if (which == 1 || which == 3) {
        for (int j = 0; j < data.dim(); ++j) delta.W[0](unit, j) = sgn * hp.q[j];
        delta.b[0][unit] = sgn * hp.beta;
    }
    if (which == 2 || which == 3) delta.V(0, unit) = 1.0;

    DescentProbe probe;
    probe.direction = delta.flatten();

    // identify the cell the ray enters
    Vec base = p.flatten();
    Params work = p;
    FrozenActivation frozen;
    bool have = false;
    for (double t0 : {1e-7, 1e-6, 1e-5}) {
        Vec cand = base;
        axpy(t0, probe.direction, cand);
        work.unflatten(cand);
        Signature s = signature(work, data, 0.0);
        if (s.smooth()) {
            frozen = frozen_from_signs(s.s, p.shape);
            have = true;
            break;
        }
    }
    if (!have) {
        Signature s = signature(p, data, kDefaultTau);
        std::vector<std::int8_t> signs = s.s;
        for (std::int8_t& v : signs)
            if (v == 0) v = 1;
        frozen = frozen_from_signs(signs, p.shape);
    }

    CellDecomposition dec = decompose_one_hidden(data, frozen);
    double active_sum = 0.0;
    for (int i = 0; i < data.size(); ++i)
        active_sum += data.weights[i] * frozen.loss_gates[i][0] * frozen.hidden_slopes[i][0][unit];
    Vec wk(data.dim());
    for (int j = 0; j < data.dim(); ++j) wk[j] = p.W[0](unit, j);
    double lin = dot(dec.unit_input_coeff[unit], wk) + dec.unit_bias_coeff[unit] * p.b[0][unit];

    if (which == 1) {
        probe.first_order = std::fabs(p.V(0, unit)) * hp.margin * active_sum;
        probe.second_order = 0.0;
    } else if (which == 2) {
        probe.first_order = lin;
        probe.second_order = 0.0;
    } else {
        probe.first_order = lin;
        probe.second_order = hp.margin * active_sum;
    }

    double base_loss = total_loss(p, data);
    for (double t : {1e-4, 1e-5, 1e-6}) {
        Vec cand = base;
        axpy(t, probe.direction, cand);
        work.unflatten(cand);
        probe.eval_t.push_back(t);
        probe.empirical_decrease.push_back(base_loss - total_loss(work, data));
    }
    return probe;
}

double convex_hinge_optimum(const LabeledDataset& data) {
    if (data.mode != LabelMode::Binary)
        throw unsupported_configuration("convex hinge problem needs binary labels");
    const int d = data.dim(), N = data.size();
    // variables: w (free), c (free), xi_i >= 0
    LpProblem lp(d + 1 + N);
    for (int j = 0; j <= d; ++j)
        lp.lower[j] = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) lp.objective[d + 1 + i] = data.weights[i];
    for (int i = 0; i < N; ++i) {
        Vec row(d + 1 + N, 0.0);
        double y = data.label_sign(i);
        for (int j = 0; j < d; ++j) row[j] = y * data.points[i][j];
        row[d] = y;
        row[d + 1 + i] = 1.0;
        lp.add_row(row, Rel::GE, 1.0);
    }
    LpResult res = solve_lp(lp);
    if (res.status != LpStatus::Optimal)
        throw precondition_error("convex hinge LP failed to solve");
    return res.objective;
}

Verdict deep_linear_check(const Params& p, const LabeledDataset& data,
                          const CriticalityResult& crit, std::uint64_t seed) {
    require(data.mode == LabelMode::Binary, "deep linear check needs binary mode");
    require(p.shape.alpha == 1.0, "deep linear check needs alpha = 1");
    require(crit.critical, "deep linear check needs a critical point");

    // end-to-end weight vector (W^(L) ... W^(1))^T v
    Vec vbar(p.V.cols);
    for (int j = 0; j < p.V.cols; ++j) vbar[j] = p.V(0, j);
    for (int l = p.shape.depth() - 1; l >= 0; --l) vbar = matvec_t(p.W[l], vbar);

    Verdict out;
    double loss = total_loss(p, data);
    double opt = convex_hinge_optimum(data);
    if (norm2(vbar) > 1e-9) {
        double gap = loss - opt;
        out.passed = std::fabs(gap) <= 1e-5;
        out.detail = "end-to-end v nonzero; loss " + std::to_string(loss) + ", convex optimum " +
                     std::to_string(opt);
        return out;
    }
    // vanished end-to-end vector: meaningful only at local minima with equal weights
    if (!equal_class_weights(data)) {
        out.passed = true;
        out.detail = "end-to-end v = 0 and classes not equally weighted; no prediction";
        return out;
    }
    std::mt19937_64 rng(seed);
    Vec base = p.flatten();
    Params work = p;
    for (double radius : {1e-3, 1e-5}) {
        for (int s = 0; s < 500; ++s) {
            Vec cand = base;
            axpy(1.0, ball_point(rng, int(base.size()), radius), cand);
            work.unflatten(cand);
            if (loss - total_loss(work, data) > 1e-9) {
                out.passed = true;
                out.detail = "end-to-end v = 0 but not a local minimum; no prediction";
                return out;
            }
        }
    }
    out.passed = std::fabs(loss - opt) <= 1e-5;
    out.detail = "end-to-end v = 0 at an apparent local minimum; loss " + std::to_string(loss) +
                 ", convex optimum " + std::to_string(opt);
    return out;
}

}  // namespace lscape
