#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "lscape/multilinear.hpp"

using namespace lscape;

namespace {

Vec finite_difference_gradient(const Params& p, const FrozenActivation& f,
                               const LabeledDataset& data, double h) {
    Vec base = p.flatten();
    Vec g(base.size());
    Params w = p;
    for (size_t j = 0; j < base.size(); ++j) {
        Vec fl = base;
        fl[j] = base[j] + h;
        w.unflatten(fl);
        double up = cell_loss(w, f, data);
        fl[j] = base[j] - h;
        w.unflatten(fl);
        double dn = cell_loss(w, f, data);
        g[j] = (up - dn) / (2.0 * h);
    }
    return g;
}

struct Instance {
    LabeledDataset data;
    Params params;
};

Instance random_smooth_instance(std::mt19937_64& rng, int depth, double alpha, bool binary) {
    NetworkShape s = fixtures::random_shape(rng, depth, alpha, binary);
    LabeledDataset data = fixtures::random_dataset(rng, 2 + int(rng() % 7), s.input_dim, binary,
                                                   s.output_dim);
    Params p = fixtures::random_smooth_params(rng, s, data);
    return {std::move(data), std::move(p)};
}

}  // namespace

TEST_CASE("frozen coefficients from cell signs") {
    NetworkShape s;
    s.input_dim = 1;
    s.hidden = {2};
    s.output_dim = 1;
    s.alpha = 0.25;

    SUBCASE("all-active cell") {
        std::vector<std::int8_t> signs = {1, 1, 1};
        FrozenActivation f = frozen_from_signs(signs, s);
        CHECK(f.hidden_slopes[0][0][0] == 1.0);
        CHECK(f.hidden_slopes[0][0][1] == 1.0);
        CHECK(f.loss_gates[0][0] == 1.0);
    }
    SUBCASE("all-inactive cell at alpha zero") {
        s.alpha = 0.0;
        std::vector<std::int8_t> signs = {-1, -1, -1};
        FrozenActivation f = frozen_from_signs(signs, s);
        CHECK(f.hidden_slopes[0][0][0] == 0.0);
        CHECK(f.hidden_slopes[0][0][1] == 0.0);
        CHECK(f.loss_gates[0][0] == 0.0);
    }
    SUBCASE("mixed cell matches derivative values at a member point") {
        LabeledDataset data = make_binary({{0.7}}, {1});
        std::mt19937_64 rng(5);
        Params p = fixtures::random_smooth_params(rng, s, data);
        CellId u = *cell_of(p, data).cell;
        FrozenActivation f = frozen_from_cell(u, s);
        Vec z = matvec(p.W[0], data.points[0]);
        axpy(1.0, p.b[0], z);
        for (int k = 0; k < 2; ++k) {
            double slope = z[k] > 0 ? 1.0 : s.alpha;
            CHECK(f.hidden_slopes[0][0][k] == slope);
        }
        double arg = 1.0 - forward(p, data.points[0]).output[0];
        CHECK(f.loss_gates[0][0] == (arg > 0 ? 1.0 : 0.0));
    }
}

TEST_CASE("cell loss equals the live loss inside the cell") {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 200; ++rep) {
        double alpha = rep % 3 == 0 ? 0.0 : (rep % 3 == 1 ? 0.25 : 1.0);
        Instance inst = random_smooth_instance(rng, 1 + rep % 2, alpha, rep % 2 == 0);
        CellId u = *cell_of(inst.params, inst.data).cell;
        FrozenActivation f = frozen_from_cell(u, inst.params.shape);
        double live = total_loss(inst.params, inst.data);
        double frozen = cell_loss(inst.params, f, inst.data);
        CHECK(std::fabs(frozen - live) <= 1e-12 * (1.0 + std::fabs(live)));
    }
}

TEST_CASE("cell loss differs from the live loss in a different cell") {
    LabeledDataset data = fixtures::ten_point_dataset();
    Params zero_cfg = fixtures::config_zero_loss();
    Params blind_cfg = fixtures::config_all_blind();
    CellId u_blind = *cell_of(blind_cfg, data).cell;
    FrozenActivation f = frozen_from_cell(u_blind, blind_cfg.shape);
    // frozen pattern of the all-blind cell evaluated at the zero-loss config
    double frozen = cell_loss(zero_cfg, f, data);
    double live = total_loss(zero_cfg, data);
    CHECK(std::fabs(frozen - live) > 0.1);
}

TEST_CASE("all-gates-off cell loss vanishes in binary mode") {
    std::mt19937_64 rng(103);
    Instance inst = random_smooth_instance(rng, 1, 0.25, true);
    CellId u = *cell_of(inst.params, inst.data).cell;
    std::vector<std::int8_t> signs = u.s;
    // flip every loss-layer gate off
    const NetworkShape& s = inst.params.shape;
    int D = s.neuron_count();
    for (int i = 0; i < inst.data.size(); ++i) signs[size_t(i) * D + D - 1] = -1;
    FrozenActivation f = frozen_from_signs(signs, s);
    CHECK(cell_loss(inst.params, f, inst.data) == 0.0);
    Vec g = cell_gradient(inst.params, f, inst.data);
    CHECK(norm2(g) == 0.0);
}

TEST_CASE("cell gradient matches central finite differences") {
    std::mt19937_64 rng(107);
    double worst = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
        double alpha = rep % 3 == 0 ? 0.0 : (rep % 3 == 1 ? 0.25 : 1.0);
        Instance inst = random_smooth_instance(rng, 1 + rep % 2, alpha, rep % 2 == 0);
        CellId u = *cell_of(inst.params, inst.data).cell;
        FrozenActivation f = frozen_from_cell(u, inst.params.shape);
        Vec g = cell_gradient(inst.params, f, inst.data);
        Vec fd = finite_difference_gradient(inst.params, f, inst.data, 1e-5);
        double scale = 1.0 + norm_inf(g);
        for (size_t j = 0; j < g.size(); ++j)
            worst = std::max(worst, std::fabs(g[j] - fd[j]) / scale);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("one-hidden-layer gradient matches the closed forms") {
    // gradient w.r.t. w_k is -v_k a_k, w.r.t. b_k is -v_k alpha_k, w.r.t. c is
    // -gamma, with the decomposition coefficients of the cell
    std::mt19937_64 rng(109);
    for (int rep = 0; rep < 40; ++rep) {
        NetworkShape s;
        s.input_dim = 2 + int(rng() % 2);
        s.hidden = {1 + int(rng() % 3)};
        s.output_dim = 1;
        s.alpha = rep % 2 == 0 ? 0.0 : 0.25;
        LabeledDataset data = fixtures::random_dataset(rng, 4, s.input_dim, true);
        Params p = fixtures::random_smooth_params(rng, s, data);
        CellId u = *cell_of(p, data).cell;
        FrozenActivation f = frozen_from_cell(u, s);
        CellDecomposition dec = decompose_one_hidden(data, f);
        Vec g = cell_gradient(p, f, data);

        const int K = s.hidden[0], d = s.input_dim;
        size_t off = 0;
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < d; ++j, ++off)
                CHECK(g[off] ==
                      doctest::Approx(-p.V(0, k) * dec.unit_input_coeff[k][j]).epsilon(1e-12));
        for (int k = 0; k < K; ++k, ++off)
            CHECK(g[off] == doctest::Approx(-p.V(0, k) * dec.unit_bias_coeff[k]).epsilon(1e-12));
        // V block
        for (int k = 0; k < K; ++k, ++off) {
            Vec wk(d);
            for (int j = 0; j < d; ++j) wk[j] = p.W[0](k, j);
            double expected = -(dot(dec.unit_input_coeff[k], wk) +
                                dec.unit_bias_coeff[k] * p.b[0][k]);
            CHECK(g[off] == doctest::Approx(expected).epsilon(1e-12));
        }
        CHECK(g[off] == doctest::Approx(-dec.output_bias_coeff).epsilon(1e-12));
    }
}

TEST_CASE("decomposition reconstructs the cell loss") {
    std::mt19937_64 rng(113);
    for (int rep = 0; rep < 100; ++rep) {
        NetworkShape s;
        s.input_dim = 1 + int(rng() % 3);
        s.hidden = {1 + int(rng() % 3)};
        s.output_dim = 1;
        s.alpha = rep % 3 == 0 ? 0.0 : (rep % 3 == 1 ? 0.25 : 1.0);
        LabeledDataset data = fixtures::random_dataset(rng, 2 + int(rng() % 6), s.input_dim, true);
        Params p = fixtures::random_smooth_params(rng, s, data);
        FrozenActivation f = frozen_from_cell(*cell_of(p, data).cell, s);
        CellDecomposition dec = decompose_one_hidden(data, f);
        double a = dec.evaluate(p);
        double b = cell_loss(p, f, data);
        CHECK(std::fabs(a - b) <= 1e-12 * (1.0 + std::fabs(b)));
    }
}

TEST_CASE("decomposition trivial cases") {
    SUBCASE("single point single term") {
        LabeledDataset data = make_binary({{2.0, -1.0}}, {1});
        NetworkShape s;
        s.input_dim = 2;
        s.hidden = {1};
        s.output_dim = 1;
        s.alpha = 0.25;
        std::vector<std::int8_t> signs = {1, 1};
        FrozenActivation f = frozen_from_signs(signs, s);
        CellDecomposition dec = decompose_one_hidden(data, f);
        CHECK(dec.unit_input_coeff[0][0] == doctest::Approx(2.0));
        CHECK(dec.unit_input_coeff[0][1] == doctest::Approx(-1.0));
        CHECK(dec.unit_bias_coeff[0] == doctest::Approx(1.0));
        CHECK(dec.output_bias_coeff == doctest::Approx(1.0));
        CHECK(dec.constant == doctest::Approx(1.0));
    }
    SUBCASE("all gates off kills every coefficient") {
        LabeledDataset data = make_binary({{1.0}, {2.0}}, {1, -1});
        NetworkShape s;
        s.input_dim = 1;
        s.hidden = {1};
        s.output_dim = 1;
        s.alpha = 0.25;
        std::vector<std::int8_t> signs = {1, -1, 1, -1};
        FrozenActivation f = frozen_from_signs(signs, s);
        CellDecomposition dec = decompose_one_hidden(data, f);
        CHECK(norm2(dec.unit_input_coeff[0]) == 0.0);
        CHECK(dec.unit_bias_coeff[0] == 0.0);
        CHECK(dec.output_bias_coeff == 0.0);
        CHECK(dec.constant == 0.0);
        CHECK(flat_cell_coeff_test(dec, 1e-9));
    }
    SUBCASE("wrong configuration is rejected") {
        LabeledDataset data = fixtures::three_class_clusters();
        NetworkShape s;
        s.input_dim = 2;
        s.hidden = {2};
        s.output_dim = 3;
        s.alpha = 0.25;
        std::vector<std::int8_t> signs(size_t(data.size()) * s.neuron_count(), 1);
        FrozenActivation f = frozen_from_signs(signs, s);
        CHECK_THROWS_AS(decompose_one_hidden(data, f), unsupported_configuration);
    }
}

TEST_CASE("cell loss is affine in each parameter block") {
    // multilinearity: fixing all but one block, three collinear points give
    // collinear losses
    std::mt19937_64 rng(127);
    for (int rep = 0; rep < 20; ++rep) {
        Instance inst = random_smooth_instance(rng, 2, 0.25, rep % 2 == 0);
        FrozenActivation f = frozen_from_cell(*cell_of(inst.params, inst.data).cell,
                                              inst.params.shape);
        const int L = inst.params.shape.depth();
        for (int block = 0; block < 2 * L + 2; ++block) {
            Params p0 = inst.params, p1 = inst.params, pmid = inst.params;
            auto scale_block = [&](Params& p, double t) {
                if (block < L)
                    for (double& v : p.W[block].data) v *= t;
                else if (block < 2 * L)
                    for (double& v : p.b[block - L]) v *= t;
                else if (block == 2 * L)
                    for (double& v : p.V.data) v *= t;
                else
                    for (double& v : p.c) v *= t;
            };
            scale_block(p1, 3.0);
            scale_block(pmid, 2.0);  // midpoint of t=1 and t=3
            double l0 = cell_loss(p0, f, inst.data);
            double l1 = cell_loss(p1, f, inst.data);
            double lm = cell_loss(pmid, f, inst.data);
            CHECK(std::fabs(lm - 0.5 * (l0 + l1)) <= 1e-10 * (1.0 + std::fabs(l0) + std::fabs(l1)));
        }
    }
}

TEST_CASE("hessian is harmonic and saddle-like") {
    std::mt19937_64 rng(131);
    int nonzero_hessians = 0;
    for (int rep = 0; rep < 30; ++rep) {
        Instance inst = random_smooth_instance(rng, 1 + rep % 2, rep % 2 ? 0.25 : 0.0,
                                               rep % 3 != 0);
        FrozenActivation f = frozen_from_cell(*cell_of(inst.params, inst.data).cell,
                                              inst.params.shape);
        Matrix H = cell_hessian(inst.params, f, inst.data);
        double trace = 0.0, fro = 0.0;
        for (int i = 0; i < H.rows; ++i) {
            trace += H(i, i);
            for (int j = 0; j < H.cols; ++j) fro += H(i, j) * H(i, j);
        }
        fro = std::sqrt(fro);
        CHECK(std::fabs(trace) <= 1e-6 * (1.0 + fro));
        if (fro > 1e-8) {
            Vec eig = symmetric_eigenvalues(H);
            CHECK(eig.front() < 0.0);
            CHECK(eig.back() > 0.0);
            ++nonzero_hessians;
        }
    }
    CHECK(nonzero_hessians > 10);
}

TEST_CASE("all-gates-off hessian vanishes") {
    std::mt19937_64 rng(137);
    Instance inst = random_smooth_instance(rng, 1, 0.25, true);
    const NetworkShape& s = inst.params.shape;
    std::vector<std::int8_t> signs(size_t(inst.data.size()) * s.neuron_count(), 1);
    int D = s.neuron_count();
    for (int i = 0; i < inst.data.size(); ++i) signs[size_t(i) * D + D - 1] = -1;
    FrozenActivation f = frozen_from_signs(signs, s);
    Matrix H = cell_hessian(inst.params, f, inst.data);
    for (double v : H.data) CHECK(v == 0.0);
}

TEST_CASE("flatness tests on the reference configurations") {
    LabeledDataset data = fixtures::ten_point_dataset();

    SUBCASE("zero-loss cell is flat with constant zero") {
        Params p = fixtures::config_zero_loss();
        FrozenActivation f = frozen_from_cell(*cell_of(p, data).cell, p.shape);
        CellDecomposition dec = decompose_one_hidden(data, f);
        CHECK(flat_cell_coeff_test(dec, 1e-9));
        CHECK(dec.constant == doctest::Approx(0.0));
    }
    SUBCASE("all-blind cell is flat with constant one") {
        Params p = fixtures::config_all_blind();
        FrozenActivation f = frozen_from_cell(*cell_of(p, data).cell, p.shape);
        CellDecomposition dec = decompose_one_hidden(data, f);
        CHECK(flat_cell_coeff_test(dec, 1e-9));
        CHECK(dec.constant == doctest::Approx(1.0));
    }
    SUBCASE("a partially solved cell is not flat") {
        Params p = fixtures::config_plateau_three_tenths();
        FrozenActivation f = frozen_from_cell(*cell_of(p, data).cell, p.shape);
        CellDecomposition dec = decompose_one_hidden(data, f);
        // the unsolved classes are unbalanced: the output-bias coefficient
        // keeps the cell non-constant as a function of all parameters
        CHECK(!flat_cell_coeff_test(dec, 1e-9));
        CHECK(dec.output_bias_coeff == doctest::Approx(0.1));
    }
    SUBCASE("generic separable leaky cell with active gates is not flat") {
        std::mt19937_64 rng(139);
        NetworkShape s = fixtures::two_unit_relu_shape(0.25);
        Params p = Params::random(s, 1.0, rng);
        FrozenActivation f = frozen_from_cell(*cell_of(p, data).cell, p.shape);
        bool any_gate = false;
        for (int i = 0; i < data.size(); ++i) any_gate = any_gate || f.loss_gates[i][0] > 0;
        REQUIRE(any_gate);
        CHECK(!flat_cell_coeff_test(decompose_one_hidden(data, f), 1e-9));
    }
}

TEST_CASE("sampled flatness agrees with the coefficient test") {
    LabeledDataset data = fixtures::ten_point_dataset();
    std::mt19937_64 rng(149);

    SUBCASE("flat cell") {
        Params p = fixtures::config_all_blind();
        CellId u = *cell_of(p, data).cell;
        CHECK(flat_cell_sampled_test(p, u, data, 16, rng));
    }
    SUBCASE("non-flat cell (output bias live)") {
        Params p0 = fixtures::config_plateau_three_tenths();
        NetworkShape s = p0.shape;
        s.output_bias = true;
        Params p = Params::zeros(s);
        p.W = p0.W;
        p.b = p0.b;
        p.V = p0.V;
        CellId u = *cell_of(p, data).cell;
        CHECK(!flat_cell_sampled_test(p, u, data, 16, rng));
        FrozenActivation f = frozen_from_cell(u, s);
        CHECK(!flat_cell_coeff_test(decompose_one_hidden(data, f), 1e-9));
    }
    SUBCASE("bias-free model: same cell is constant in its own parameters") {
        // with c frozen out, only the output-bias coefficient is nonzero, so
        // the sampled test (over live parameters) reports a plateau while the
        // coefficient test still flags the c-sensitivity
        Params p = fixtures::config_plateau_three_tenths();
        CellId u = *cell_of(p, data).cell;
        CHECK(flat_cell_sampled_test(p, u, data, 16, rng));
        FrozenActivation f = frozen_from_cell(u, p.shape);
        CHECK(!flat_cell_coeff_test(decompose_one_hidden(data, f), 1e-9));
    }
    SUBCASE("constant-loss deep frozen cell") {
        NetworkShape s;
        s.input_dim = 2;
        s.hidden = {2, 2};
        s.output_dim = 1;
        s.alpha = 0.0;
        std::mt19937_64 rng2(151);
        LabeledDataset d2 = fixtures::random_dataset(rng2, 4, 2, true);
        Params p = fixtures::random_smooth_params(rng2, s, d2);
        Signature sig = signature(p, d2, 1e-9);
        std::vector<std::int8_t> signs = sig.s;
        int D = s.neuron_count();
        for (int i = 0; i < d2.size(); ++i) signs[size_t(i) * D + D - 1] = -1;
        FrozenActivation f = frozen_from_signs(signs, s);
        CHECK(cell_loss(p, f, d2) == 0.0);
        CHECK(norm2(cell_gradient(p, f, d2)) == 0.0);
    }
}

TEST_CASE("error moment balance") {
    SUBCASE("all-zero indicators satisfy the system") {
        LabeledDataset data = fixtures::three_class_clusters();
        Matrix eps(data.size(), 3, 0.0);
        Vec lambdas(data.size(), 1.0);
        CHECK(flat_cell_condition(data, eps, lambdas));
    }
    SUBCASE("duplicated opposite-label points admit a witness") {
        LabeledDataset data = make_multiclass({{0.5, 1.0}, {0.5, 1.0}}, {0, 1}, 2);
        Matrix eps(2, 2, 0.0);
        eps(0, 1) = 1.0;  // point 1 errs on class 2
        eps(1, 0) = 1.0;  // point 2 errs on class 1
        Vec lambdas = {1.0, 1.0};
        CHECK(flat_cell_condition(data, eps, lambdas));
    }
    SUBCASE("generic data rejects nonzero indicators") {
        std::mt19937_64 rng(157);
        LabeledDataset data = fixtures::random_dataset(rng, 3, 2, false, 2);
        // exhaustive over indicator patterns and slope choices {1, 0.5}
        for (unsigned mask = 1; mask < (1u << 3); ++mask) {
            Matrix eps(3, 2, 0.0);
            for (int i = 0; i < 3; ++i)
                if ((mask >> i) & 1u) eps(i, 1 - data.class_of(i)) = 1.0;
            for (unsigned lm = 0; lm < (1u << 3); ++lm) {
                Vec lambdas(3);
                for (int i = 0; i < 3; ++i) lambdas[i] = ((lm >> i) & 1u) ? 0.5 : 1.0;
                CHECK(!flat_cell_condition(data, eps, lambdas));
            }
        }
    }
}
