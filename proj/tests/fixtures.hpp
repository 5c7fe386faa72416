#pragma once

#include "lscape/core.hpp"

namespace fixtures {

using namespace lscape;

/// Ten 2d points in two linearly separable clusters, equal weights.
/// Circles (+1) sit on the left, triangles (-1) on the right; each class has
/// an outlier near the bottom that a two-unit net can fail to solve.
inline LabeledDataset ten_point_dataset() {
    std::vector<Vec> pts = {
        {-0.5, -0.2}, {-0.1, -0.4}, {-0.2, 1.3}, {0.2, 1.4}, {0.0, 1.7},  // +1
        {1.6, 1.3},   {2.0, 1.5},   {1.9, 1.2},  {1.9, 1.8}, {2.0, -0.3},  // -1
    };
    std::vector<int> labels = {1, 1, 1, 1, 1, -1, -1, -1, -1, -1};
    return make_binary(std::move(pts), std::move(labels));
}

/// Two ReLU units, scalar output, no output bias (the bias-free model the
/// hand-built configurations below are minima of).
inline NetworkShape two_unit_relu_shape(double alpha = 0.0) {
    NetworkShape s;
    s.input_dim = 2;
    s.hidden = {2};
    s.output_dim = 1;
    s.alpha = alpha;
    s.output_bias = false;
    return s;
}

/// Every point solved with strict margin: unit 1 carries the left cluster,
/// unit 2 the right one. Interior of a constant-zero cell.
inline Params config_zero_loss() {
    Params p = Params::zeros(two_unit_relu_shape());
    p.W[0](0, 0) = -1.0;
    p.W[0](0, 1) = 0.0;
    p.b[0][0] = 0.7;
    p.W[0](1, 0) = 1.0;
    p.W[0](1, 1) = 0.0;
    p.b[0][1] = -0.9;
    p.V(0, 0) = 3.0;
    p.V(0, 1) = -2.0;
    return p;
}

/// Both bottom outliers plus one more point unsolved and blind to both
/// units; loss 3/10. Strictly interior: every inequality is slack.
inline Params config_plateau_three_tenths() {
    Params p = Params::zeros(two_unit_relu_shape());
    p.W[0](0, 0) = -1.0;
    p.W[0](0, 1) = 1.0;
    p.b[0][0] = -0.8;
    p.W[0](1, 0) = 1.0;
    p.W[0](1, 1) = 1.0;
    p.b[0][1] = -2.2;
    p.V(0, 0) = 3.0;
    p.V(0, 1) = -2.0;
    return p;
}

/// Same geometry, but the output weight of unit 1 is tuned so one solved
/// point sits exactly at its hinge margin: the point lies on the non-smooth
/// set while the loss stays 3/10.
inline Params config_sharp_boundary() {
    Params p = config_plateau_three_tenths();
    const Vec margin_point = {0.2, 1.4};
    double pre = p.W[0](0, 0) * margin_point[0] + p.W[0](0, 1) * margin_point[1] + p.b[0][0];
    p.V(0, 0) = 1.0 / pre;  // output for this point lands exactly at 1
    return p;
}

/// Both units blind to every point: constant-loss cell at 10/10.
inline Params config_all_blind() {
    Params p = Params::zeros(two_unit_relu_shape());
    p.W[0](0, 0) = 0.0;
    p.W[0](0, 1) = -1.0;
    p.b[0][0] = -0.5;
    p.W[0](1, 0) = -1.0;
    p.W[0](1, 1) = 0.0;
    p.b[0][1] = -0.6;
    p.V(0, 0) = 1.5;
    p.V(0, 1) = -1.5;
    return p;
}

/// Separable three-class 2d clusters for one-versus-all experiments.
inline LabeledDataset three_class_clusters() {
    std::vector<Vec> pts = {
        {0.0, 2.0},  {0.3, 2.2},  {-0.3, 1.9},   // class 1 (top)
        {-2.0, -1.0}, {-2.2, -0.7}, {-1.8, -1.3},  // class 2 (bottom left)
        {2.0, -1.0}, {2.3, -1.2}, {1.8, -0.8},   // class 3 (bottom right)
    };
    std::vector<int> classes = {0, 0, 0, 1, 1, 1, 2, 2, 2};
    return make_multiclass(std::move(pts), std::move(classes), 3);
}

/// Random fully-connected shape with small dims, binary or multiclass.
inline NetworkShape random_shape(std::mt19937_64& rng, int depth, double alpha, bool binary,
                                 int max_dim = 4, int max_classes = 3) {
    NetworkShape s;
    std::uniform_int_distribution<int> dim(1, max_dim);
    s.input_dim = dim(rng);
    for (int l = 0; l < depth; ++l) s.hidden.push_back(dim(rng));
    s.output_dim = binary ? 1 : std::uniform_int_distribution<int>(2, max_classes)(rng);
    s.alpha = alpha;
    return s;
}

inline LabeledDataset random_dataset(std::mt19937_64& rng, int n, int d, bool binary,
                                     int num_classes = 3) {
    std::vector<Vec> pts;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        pts.push_back(uniform_vec(rng, d, -1.0, 1.0));
        if (binary)
            labels.push_back(uniform(rng, 0.0, 1.0) < 0.5 ? -1 : 1);
        else
            labels.push_back(std::uniform_int_distribution<int>(0, num_classes - 1)(rng));
    }
    Vec w = uniform_vec(rng, n, 0.2, 1.0);
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    if (binary) return make_binary(std::move(pts), std::move(labels), std::move(w));
    return make_multiclass(std::move(pts), std::move(labels), num_classes, std::move(w));
}

/// Params at a signature-smooth point (resamples until no zero entries).
inline Params random_smooth_params(std::mt19937_64& rng, const NetworkShape& s,
                                   const LabeledDataset& data, double half_width = 1.0);

}  // namespace fixtures

#include "lscape/cells.hpp"

namespace fixtures {

inline Params random_smooth_params(std::mt19937_64& rng, const NetworkShape& s,
                                   const LabeledDataset& data, double half_width) {
    for (int tries = 0; tries < 100; ++tries) {
        Params p = Params::random(s, half_width, rng);
        if (signature(p, data, 1e-9).smooth()) return p;
    }
    throw std::runtime_error("could not sample a smooth point");
}

}  // namespace fixtures
