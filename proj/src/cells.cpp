#include "lscape/cells.hpp"

#include <cmath>

#include "lscape/multilinear.hpp"
#include "lscape/simplex.hpp"

namespace lscape {

namespace {

std::int8_t ternary_sign(double a, double tau) {
    if (std::fabs(a) <= tau) return 0;
    return a > 0 ? 1 : -1;
}

}  // namespace

bool Signature::smooth() const {
    for (std::int8_t v : s)
        if (v == 0) return false;
    return true;
}

int Signature::zero_count() const {
    int z = 0;
    for (std::int8_t v : s)
        if (v == 0) ++z;
    return z;
}

std::vector<ZeroCoord> Signature::zeros(const NetworkShape& shape) const {
    std::vector<ZeroCoord> out;
    for (int i = 0; i < n_points; ++i) {
        int off = 0;
        for (int l = 1; l <= shape.depth() + 1; ++l) {
            int dl = shape.layer_dim(l);
            for (int k = 0; k < dl; ++k, ++off) {
                if (at(i, off) == 0) out.push_back({i, l, k});
            }
        }
    }
    return out;
}

CellId cell_from_signs(std::vector<std::int8_t> signs) {
    CellId id;
    id.s = std::move(signs);
    Hash64 h;
    std::uint64_t word = 0;
    int bits = 0;
    for (std::int8_t v : id.s) {
        word = (word << 1) | (v > 0 ? 1u : 0u);
        if (++bits == 64) {
            h.add(word);
            word = 0;
            bits = 0;
        }
    }
    if (bits > 0) h.add(word);
    h.add(std::uint64_t(id.s.size()));
    id.hash = h.get();
    return id;
}

Signature signature(const Params& p, const LabeledDataset& data, double tau) {
    if (data.dim() != p.shape.input_dim) throw shape_error("data dimension mismatch");
    if (data.mode == LabelMode::Binary && p.shape.output_dim != 1)
        throw shape_error("binary mode needs scalar output");
    if (data.mode == LabelMode::MultiClass && p.shape.output_dim != data.num_classes)
        throw shape_error("output dim must equal class count");
    Signature sig;
    sig.n_points = data.size();
    sig.width = p.shape.neuron_count();
    sig.s.reserve(size_t(sig.n_points) * sig.width);
    for (int i = 0; i < data.size(); ++i) {
        Vec x = data.points[i];
        for (int l = 0; l < p.shape.depth(); ++l) {
            Vec z = matvec(p.W[l], x);
            axpy(1.0, p.b[l], z);
            for (double v : z) sig.s.push_back(ternary_sign(v, tau));
            x = leaky_relu_vec(z, p.shape.alpha);
        }
        Vec yhat = matvec(p.V, x);
        axpy(1.0, p.c, yhat);
        if (data.mode == LabelMode::Binary) {
            sig.s.push_back(ternary_sign(1.0 - double(data.label_sign(i)) * yhat[0], tau));
        } else {
            double proj = yhat[data.class_of(i)];
            for (int r = 0; r < p.shape.output_dim; ++r)
                sig.s.push_back(ternary_sign(1.0 + yhat[r] - proj, tau));
        }
    }
    return sig;
}

CellQuery cell_of(const Params& p, const LabeledDataset& data, double tau) {
    Signature sig = signature(p, data, tau);
    CellQuery q;
    if (sig.smooth()) {
        q.cell = cell_from_signs(sig.s);
        return q;
    }
    BoundaryReport rep;
    rep.zeros = sig.zeros(p.shape);
    // functional norms under the all-active completion of the zeros
    std::vector<std::int8_t> completed = sig.s;
    for (std::int8_t& v : completed)
        if (v == 0) v = 1;
    FrozenActivation f = frozen_from_signs(completed, p.shape);
    for (const ZeroCoord& zc : rep.zeros) {
        double n = norm2(frozen_coord_gradient(p, data, f, zc));
        rep.functional_norms.push_back(n);
        if (n < 1e-12) rep.degenerate = true;
    }
    q.report = std::move(rep);
    return q;
}

namespace {

// Fills `signs` with the base signature, zeros replaced per mask bit
// (bit set -> +1).
std::vector<std::int8_t> complete_signs(const Signature& sig, const std::vector<size_t>& zero_pos,
                                        std::uint64_t mask) {
    std::vector<std::int8_t> signs = sig.s;
    for (size_t zi = 0; zi < zero_pos.size(); ++zi)
        signs[zero_pos[zi]] = (mask >> zi) & 1ull ? 1 : -1;
    return signs;
}

bool lp_feasible(const std::vector<Vec>& functionals, const std::vector<int>& signs) {
    const int P = int(functionals.front().size());
    const int z = int(functionals.size());
    LpProblem lp(P + 1);  // dw_0..dw_{P-1}, slack
    for (int j = 0; j < P; ++j) {
        lp.lower[j] = -1.0;
        lp.upper[j] = 1.0;
    }
    lp.lower[P] = 0.0;
    lp.objective[P] = -1.0;  // maximize slack
    for (int zi = 0; zi < z; ++zi) {
        Vec row(P + 1, 0.0);
        double n = norm2(functionals[zi]);
        double scale = n > 1e-12 ? double(signs[zi]) / n : double(signs[zi]);
        for (int j = 0; j < P; ++j) row[j] = scale * functionals[zi][j];
        row[P] = -1.0;
        lp.add_row(row, Rel::GE, 0.0);
    }
    LpResult res = solve_lp(lp);
    return res.status == LpStatus::Optimal && res.x[P] > 1e-9;
}

bool probe_realizes(const Params& p, const LabeledDataset& data, const Vec& base_flat,
                    const std::vector<std::int8_t>& target, std::uint64_t mask) {
    Params work = p;
    std::mt19937_64 rng(mix64(0x9d5c0fb3u ^ (mask << 17)));
    // 64 probes split across three radii
    const double radii[3] = {1e-4, 1e-6, 1e-8};
    const int counts[3] = {22, 21, 21};
    for (int rset = 0; rset < 3; ++rset) {
        for (int t = 0; t < counts[rset]; ++t) {
            Vec cand = base_flat;
            axpy(1.0, ball_point(rng, int(cand.size()), radii[rset]), cand);
            work.unflatten(cand);
            Signature s2 = signature(work, data, 0.0);
            if (s2.s == target) return true;
        }
    }
    return false;
}

}  // namespace

std::vector<CellId> incidence_set(const Params& p, const LabeledDataset& data, double tau,
                                  int max_zeros) {
    Signature sig = signature(p, data, tau);
    if (sig.smooth()) return {cell_from_signs(sig.s)};

    std::vector<ZeroCoord> zero_coords = sig.zeros(p.shape);
    const int z = int(zero_coords.size());
    if (z > max_zeros) throw too_many_zeros(z, max_zeros);

    // flat positions of the zero entries
    std::vector<size_t> zero_pos;
    for (size_t pos = 0; pos < sig.s.size(); ++pos)
        if (sig.s[pos] == 0) zero_pos.push_back(pos);

    Vec base_flat = p.flatten();
    std::vector<CellId> cells;
    for (std::uint64_t mask = 0; mask < (1ull << z); ++mask) {
        std::vector<std::int8_t> signs = complete_signs(sig, zero_pos, mask);
        FrozenActivation f = frozen_from_signs(signs, p.shape);
        std::vector<Vec> functionals;
        std::vector<int> want;
        for (int zi = 0; zi < z; ++zi) {
            functionals.push_back(frozen_coord_gradient(p, data, f, zero_coords[zi]));
            want.push_back((mask >> zi) & 1ull ? 1 : -1);
        }
        bool ok = lp_feasible(functionals, want);
        if (!ok) ok = probe_realizes(p, data, base_flat, signs, mask);
        if (ok) cells.push_back(cell_from_signs(std::move(signs)));
    }
    return cells;
}

}  // namespace lscape
