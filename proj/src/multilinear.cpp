#include "lscape/multilinear.hpp"

#include <cmath>

namespace lscape {

namespace {

// Features of one point under frozen slopes, with pre-activations kept.
struct FrozenRun {
    std::vector<Vec> x;  // x^(0) .. x^(L)
    Vec yhat;
};

FrozenRun frozen_forward(const Params& p, const FrozenActivation& f, int i, const Vec& input) {
    FrozenRun run;
    run.x.push_back(input);
    for (int l = 0; l < p.shape.depth(); ++l) {
        Vec z = matvec(p.W[l], run.x.back());
        axpy(1.0, p.b[l], z);
        const Vec& s = f.hidden_slopes[i][l];
        for (size_t k = 0; k < z.size(); ++k) z[k] = s[k] * z[k];
        run.x.push_back(std::move(z));
    }
    run.yhat = matvec(p.V, run.x.back());
    axpy(1.0, p.c, run.yhat);
    return run;
}

// Accumulates d(loss)/d(params) for one point given dout = d(loss)/d(yhat).
void backprop_output(Params& grad, const Params& p, const FrozenActivation& f, int i,
                     const FrozenRun& run, const Vec& dout) {
    add_outer(grad.V, dout, run.x.back());
    if (p.shape.output_bias) axpy(1.0, dout, grad.c);
    Vec dx = matvec_t(p.V, dout);
    for (int l = p.shape.depth() - 1; l >= 0; --l) {
        const Vec& s = f.hidden_slopes[i][l];
        Vec dz(dx.size());
        for (size_t k = 0; k < dx.size(); ++k) dz[k] = s[k] * dx[k];
        add_outer(grad.W[l], dz, run.x[l]);
        axpy(1.0, dz, grad.b[l]);
        if (l > 0) dx = matvec_t(p.W[l], dz);
    }
}

void check_frozen_shapes(const Params& p, const FrozenActivation& f, const LabeledDataset& data) {
    if (int(f.hidden_slopes.size()) != data.size() || int(f.loss_gates.size()) != data.size())
        throw shape_error("frozen activation does not match dataset size");
    if (data.size() > 0) {
        if (int(f.hidden_slopes[0].size()) != p.shape.depth())
            throw shape_error("frozen activation depth mismatch");
        if (int(f.loss_gates[0].size()) != p.shape.output_dim)
            throw shape_error("frozen loss gate width mismatch");
    }
    if (data.mode == LabelMode::Binary && p.shape.output_dim != 1)
        throw shape_error("binary mode needs scalar output");
    if (data.mode == LabelMode::MultiClass && p.shape.output_dim != data.num_classes)
        throw shape_error("output dim must equal class count");
}

}  // namespace

FrozenActivation frozen_from_signs(const std::vector<std::int8_t>& signs,
                                   const NetworkShape& shape) {
    const int D = shape.neuron_count();
    if (signs.empty() || int(signs.size()) % D != 0)
        throw shape_error("sign vector length is not a multiple of the neuron count");
    const int n = int(signs.size()) / D;
    FrozenActivation f;
    f.alpha = shape.alpha;
    f.hidden_slopes.assign(n, {});
    f.loss_gates.assign(n, {});
    for (int i = 0; i < n; ++i) {
        size_t off = size_t(i) * D;
        for (int l = 1; l <= shape.depth(); ++l) {
            Vec s(shape.layer_dim(l));
            for (int k = 0; k < int(s.size()); ++k) {
                std::int8_t v = signs[off++];
                if (v == 0) throw shape_error("cell signs must be nonzero");
                s[k] = v > 0 ? 1.0 : shape.alpha;
            }
            f.hidden_slopes[i].push_back(std::move(s));
        }
        Vec g(shape.output_dim);
        for (int r = 0; r < shape.output_dim; ++r) {
            std::int8_t v = signs[off++];
            if (v == 0) throw shape_error("cell signs must be nonzero");
            g[r] = v > 0 ? 1.0 : 0.0;
        }
        f.loss_gates[i] = std::move(g);
    }
    return f;
}

FrozenActivation frozen_from_cell(const CellId& u, const NetworkShape& shape) {
    return frozen_from_signs(u.s, shape);
}

double cell_loss(const Params& p, const FrozenActivation& f, const LabeledDataset& data) {
    check_frozen_shapes(p, f, data);
    double total = 0.0;
    for (int i = 0; i < data.size(); ++i) {
        FrozenRun run = frozen_forward(p, f, i, data.points[i]);
        double s;
        if (data.mode == LabelMode::Binary) {
            s = f.loss_gates[i][0] * (1.0 - double(data.label_sign(i)) * run.yhat[0]);
        } else {
            double proj = run.yhat[data.class_of(i)];
            s = -1.0;
            for (int r = 0; r < p.shape.output_dim; ++r)
                s += f.loss_gates[i][r] * (1.0 + run.yhat[r] - proj);
        }
        total += data.weights[i] * s;
    }
    return total;
}

Vec cell_gradient(const Params& p, const FrozenActivation& f, const LabeledDataset& data) {
    check_frozen_shapes(p, f, data);
    Params grad = Params::zeros(p.shape);
    for (int i = 0; i < data.size(); ++i) {
        FrozenRun run = frozen_forward(p, f, i, data.points[i]);
        Vec dout(p.shape.output_dim, 0.0);
        if (data.mode == LabelMode::Binary) {
            dout[0] = -data.weights[i] * f.loss_gates[i][0] * double(data.label_sign(i));
        } else {
            double gate_sum = 0.0;
            for (int r = 0; r < p.shape.output_dim; ++r) gate_sum += f.loss_gates[i][r];
            for (int r = 0; r < p.shape.output_dim; ++r) dout[r] = data.weights[i] * f.loss_gates[i][r];
            dout[data.class_of(i)] -= data.weights[i] * gate_sum;
        }
        backprop_output(grad, p, f, i, run, dout);
    }
    return grad.flatten();
}

Matrix cell_hessian(const Params& p, const FrozenActivation& f, const LabeledDataset& data,
                    double h) {
    Params work = p;
    Vec flat = p.flatten();
    const int n = int(flat.size());
    Matrix H(n, n);
    for (int j = 0; j < n; ++j) {
        Vec fl = flat;
        fl[j] = flat[j] + h;
        work.unflatten(fl);
        Vec gp = cell_gradient(work, f, data);
        fl[j] = flat[j] - h;
        work.unflatten(fl);
        Vec gm = cell_gradient(work, f, data);
        for (int r = 0; r < n; ++r) H(r, j) = (gp[r] - gm[r]) / (2.0 * h);
    }
    for (int r = 0; r < n; ++r)
        for (int j = r + 1; j < n; ++j) {
            double v = 0.5 * (H(r, j) + H(j, r));
            H(r, j) = H(j, r) = v;
        }
    return H;
}

Vec frozen_coord_gradient(const Params& p, const LabeledDataset& data,
                          const FrozenActivation& f, const ZeroCoord& coord) {
    Params grad = Params::zeros(p.shape);
    const int i = coord.point;
    FrozenRun run = frozen_forward(p, f, i, data.points[i]);
    const int L = p.shape.depth();
    if (coord.layer >= 1 && coord.layer <= L) {
        // pre-activation z^(l)_k = <W^(l)_k, x^(l-1)> + b^(l)_k
        const int l = coord.layer - 1;  // 0-based
        const int k = coord.index;
        for (int j = 0; j < p.W[l].cols; ++j) grad.W[l](k, j) = run.x[l][j];
        grad.b[l][k] = 1.0;
        Vec dx(p.W[l].cols);
        for (int j = 0; j < p.W[l].cols; ++j) dx[j] = p.W[l](k, j);
        for (int m = l - 1; m >= 0; --m) {
            const Vec& s = f.hidden_slopes[i][m];
            Vec dz(dx.size());
            for (size_t q = 0; q < dx.size(); ++q) dz[q] = s[q] * dx[q];
            add_outer(grad.W[m], dz, run.x[m]);
            axpy(1.0, dz, grad.b[m]);
            if (m > 0) dx = matvec_t(p.W[m], dz);
        }
    } else if (coord.layer == L + 1) {
        Vec dout(p.shape.output_dim, 0.0);
        if (data.mode == LabelMode::Binary) {
            dout[0] = -double(data.label_sign(i));  // d(1 - y yhat)/dyhat
        } else {
            dout[coord.index] += 1.0;               // d(1 + yhat_r - <y,yhat>)/dyhat
            dout[data.class_of(i)] -= 1.0;
        }
        backprop_output(grad, p, f, i, run, dout);
    } else {
        throw shape_error("invalid signature coordinate layer");
    }
    return grad.flatten();
}

double CellDecomposition::evaluate(const Params& p) const {
    double s = constant;
    for (size_t k = 0; k < unit_input_coeff.size(); ++k) {
        Vec wk(p.W[0].cols);
        for (int j = 0; j < p.W[0].cols; ++j) wk[j] = p.W[0](int(k), j);
        s -= p.V(0, int(k)) * (dot(unit_input_coeff[k], wk) + unit_bias_coeff[k] * p.b[0][k]);
    }
    s -= output_bias_coeff * p.c[0];
    return s;
}

CellDecomposition decompose_one_hidden(const LabeledDataset& data, const FrozenActivation& f) {
    if (data.mode != LabelMode::Binary)
        throw unsupported_configuration("closed-form decomposition needs binary mode");
    if (data.size() == 0 || int(f.hidden_slopes[0].size()) != 1)
        throw unsupported_configuration("closed-form decomposition needs one hidden layer");
    const int K = int(f.hidden_slopes[0][0].size());
    const int d = data.dim();
    CellDecomposition dec;
    dec.unit_input_coeff.assign(K, Vec(d, 0.0));
    dec.unit_bias_coeff.assign(K, 0.0);
    for (int i = 0; i < data.size(); ++i) {
        double mye = data.weights[i] * double(data.label_sign(i)) * f.loss_gates[i][0];
        dec.output_bias_coeff += mye;
        dec.constant += data.weights[i] * f.loss_gates[i][0];
        for (int k = 0; k < K; ++k) {
            double t = mye * f.hidden_slopes[i][0][k];
            axpy(t, data.points[i], dec.unit_input_coeff[k]);
            dec.unit_bias_coeff[k] += t;
        }
    }
    return dec;
}

bool flat_cell_coeff_test(const CellDecomposition& dec, double tol) {
    for (const Vec& a : dec.unit_input_coeff)
        if (norm2(a) > tol) return false;
    for (double a : dec.unit_bias_coeff)
        if (std::fabs(a) > tol) return false;
    return std::fabs(dec.output_bias_coeff) <= tol;
}

bool flat_cell_sampled_test(const Params& member, const CellId& u, const LabeledDataset& data,
                            int m_samples, std::mt19937_64& rng) {
    FrozenActivation f = frozen_from_cell(u, member.shape);
    Vec base = member.flatten();
    const int n = int(base.size());
    double radius = 1.0;
    Params work = member;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    int found = 0, attempts = 0;
    const int max_attempts = 100 * m_samples;
    while (found < m_samples) {
        if (attempts >= max_attempts)
            throw sampling_failed("could not draw enough in-cell samples");
        // shrink after each failed batch of 8 draws
        bool hit = false;
        for (int t = 0; t < 8 && attempts < max_attempts && found < m_samples; ++t) {
            ++attempts;
            Vec cand = base;
            axpy(1.0, ball_point(rng, n, radius), cand);
            work.unflatten(cand);
            Signature sig = signature(work, data, 0.0);
            if (!sig.smooth() || !(cell_from_signs(sig.s) == u)) continue;
            hit = true;
            ++found;
            double loss = cell_loss(work, f, data);
            Vec g = cell_gradient(work, f, data);
            if (norm2(g) > 1e-9) return false;
            if (first) {
                lo = hi = loss;
                first = false;
            } else {
                lo = std::min(lo, loss);
                hi = std::max(hi, loss);
            }
        }
        if (!hit) radius *= 0.5;
    }
    return hi - lo <= 1e-9;
}

MomentBalance error_moment_residuals(const LabeledDataset& data, const Matrix& eps,
                                     const Vec& lambdas) {
    if (data.mode != LabelMode::MultiClass)
        throw unsupported_configuration("moment balance is defined for one-hot targets");
    const int N = data.size(), R = data.num_classes, d = data.dim();
    if (eps.rows != N || eps.cols != R || int(lambdas.size()) != N)
        throw shape_error("indicator shapes mismatch");
    // total error count per point over wrong classes
    Vec eps_total(N, 0.0);
    for (int i = 0; i < N; ++i)
        for (int r = 0; r < R; ++r)
            if (r != data.class_of(i)) eps_total[i] += eps(i, r);

    MomentBalance res;
    for (int r = 0; r < R; ++r) {
        Vec vec_lhs(d, 0.0);
        double slope_lhs = 0.0, weight_lhs = 0.0;
        for (int i = 0; i < N; ++i) {
            if (data.class_of(i) == r) {
                double t = eps_total[i] * data.weights[i];
                axpy(t * lambdas[i], data.points[i], vec_lhs);
                slope_lhs += t * lambdas[i];
                weight_lhs += t;
            } else {
                double t = eps(i, r) * data.weights[i];
                axpy(-t * lambdas[i], data.points[i], vec_lhs);
                slope_lhs -= t * lambdas[i];
                weight_lhs -= t;
            }
        }
        res.vector_family = std::max(res.vector_family, norm_inf(vec_lhs));
        res.slope_family = std::max(res.slope_family, std::fabs(slope_lhs));
        res.weight_family = std::max(res.weight_family, std::fabs(weight_lhs));
    }
    return res;
}

bool flat_cell_condition(const LabeledDataset& data, const Matrix& eps, const Vec& lambdas,
                         double tol) {
    MomentBalance r = error_moment_residuals(data, eps, lambdas);
    return r.vector_family <= tol && r.slope_family <= tol && r.weight_family <= tol;
}

}  // namespace lscape
