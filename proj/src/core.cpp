#include "lscape/core.hpp"

#include <cmath>

namespace lscape {

Vec LabeledDataset::onehot(int i) const {
    Vec y(num_classes, 0.0);
    y[labels[i]] = 1.0;
    return y;
}

void LabeledDataset::validate() const {
    if (points.empty()) throw shape_error("dataset has no points");
    size_t d = points.front().size();
    if (d == 0) throw shape_error("zero-dimensional data point");
    for (const auto& x : points)
        if (x.size() != d) throw shape_error("inconsistent point dimensions");
    if (labels.size() != points.size() || weights.size() != points.size())
        throw shape_error("labels/weights count mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw shape_error("weights must be strictly positive");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12) throw shape_error("weights must sum to one");
    if (mode == LabelMode::Binary) {
        for (int y : labels)
            if (y != 1 && y != -1) throw shape_error("binary labels must be +/-1");
    } else {
        if (num_classes < 2) throw shape_error("multiclass requires R >= 2");
        for (int y : labels)
            if (y < 0 || y >= num_classes) throw shape_error("class index out of range");
    }
    for (const auto& x : points)
        for (double v : x)
            if (!std::isfinite(v)) throw shape_error("non-finite data entry");
}

void LabeledDataset::normalize_weights() {
    double s = 0.0;
    for (double w : weights) s += w;
    if (s <= 0.0) throw shape_error("cannot normalize non-positive weight sum");
    for (double& w : weights) w /= s;
}

LabeledDataset make_binary(std::vector<Vec> points, std::vector<int> labels, Vec weights) {
    LabeledDataset d;
    d.mode = LabelMode::Binary;
    d.points = std::move(points);
    d.labels = std::move(labels);
    if (weights.empty()) weights.assign(d.points.size(), 1.0 / double(d.points.size()));
    d.weights = std::move(weights);
    d.validate();
    return d;
}

LabeledDataset make_multiclass(std::vector<Vec> points, std::vector<int> classes, int num_classes,
                               Vec weights) {
    LabeledDataset d;
    d.mode = LabelMode::MultiClass;
    d.points = std::move(points);
    d.labels = std::move(classes);
    d.num_classes = num_classes;
    if (weights.empty()) weights.assign(d.points.size(), 1.0 / double(d.points.size()));
    d.weights = std::move(weights);
    d.validate();
    return d;
}

int NetworkShape::layer_dim(int l) const {
    if (l == 0) return input_dim;
    if (l <= depth()) return hidden[l - 1];
    return output_dim;
}

int NetworkShape::neuron_count() const {
    int D = output_dim;
    for (int h : hidden) D += h;
    return D;
}

void NetworkShape::validate() const {
    if (input_dim < 1 || output_dim < 1) throw shape_error("layer dims must be >= 1");
    for (int h : hidden)
        if (h < 1) throw shape_error("layer dims must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw shape_error("alpha must lie in [0,1]");
}

Params Params::zeros(const NetworkShape& s) {
    s.validate();
    Params p;
    p.shape = s;
    for (int l = 1; l <= s.depth(); ++l) {
        p.W.emplace_back(s.layer_dim(l), s.layer_dim(l - 1));
        p.b.emplace_back(s.layer_dim(l), 0.0);
    }
    p.V = Matrix(s.output_dim, s.layer_dim(s.depth()));
    p.c.assign(s.output_dim, 0.0);
    return p;
}

Params Params::random(const NetworkShape& s, double half_width, std::mt19937_64& rng) {
    Params p = zeros(s);
    for (auto& w : p.W)
        for (double& v : w.data) v = uniform(rng, -half_width, half_width);
    for (auto& bb : p.b)
        for (double& v : bb) v = uniform(rng, -half_width, half_width);
    for (double& v : p.V.data) v = uniform(rng, -half_width, half_width);
    if (s.output_bias)
        for (double& v : p.c) v = uniform(rng, -half_width, half_width);
    return p;
}

int Params::flat_size() const {
    int n = 0;
    for (const auto& w : W) n += int(w.data.size());
    for (const auto& bb : b) n += int(bb.size());
    n += int(V.data.size());
    if (shape.output_bias) n += int(c.size());
    return n;
}

Vec Params::flatten() const {
    Vec f;
    f.reserve(flat_size());
    for (size_t l = 0; l < W.size(); ++l) {
        f.insert(f.end(), W[l].data.begin(), W[l].data.end());
        f.insert(f.end(), b[l].begin(), b[l].end());
    }
    f.insert(f.end(), V.data.begin(), V.data.end());
    if (shape.output_bias) f.insert(f.end(), c.begin(), c.end());
    return f;
}

void Params::unflatten(const Vec& flat) {
    if (int(flat.size()) != flat_size()) throw shape_error("flat vector size mismatch");
    size_t k = 0;
    for (size_t l = 0; l < W.size(); ++l) {
        for (double& v : W[l].data) v = flat[k++];
        for (double& v : b[l]) v = flat[k++];
    }
    for (double& v : V.data) v = flat[k++];
    if (shape.output_bias)
        for (double& v : c) v = flat[k++];
}

void Params::validate() const {
    shape.validate();
    if (int(W.size()) != shape.depth() || int(b.size()) != shape.depth())
        throw shape_error("layer count mismatch");
    for (int l = 1; l <= shape.depth(); ++l) {
        if (W[l - 1].rows != shape.layer_dim(l) || W[l - 1].cols != shape.layer_dim(l - 1))
            throw shape_error("W shape mismatch at layer " + std::to_string(l));
        if (int(b[l - 1].size()) != shape.layer_dim(l))
            throw shape_error("b shape mismatch at layer " + std::to_string(l));
    }
    if (V.rows != shape.output_dim || V.cols != shape.layer_dim(shape.depth()))
        throw shape_error("V shape mismatch");
    if (int(c.size()) != shape.output_dim) throw shape_error("c shape mismatch");
    for (const auto& w : W)
        for (double v : w.data)
            if (!std::isfinite(v)) throw shape_error("non-finite parameter");
    for (double v : V.data)
        if (!std::isfinite(v)) throw shape_error("non-finite parameter");
}

double leaky_relu(double x, double alpha) { return alpha * std::min(x, 0.0) + std::max(x, 0.0); }

Vec leaky_relu_vec(const Vec& x, double alpha) {
    Vec y(x);
    for (double& v : y) v = leaky_relu(v, alpha);
    return y;
}

ForwardPass forward(const Params& p, const Vec& x) {
    if (int(x.size()) != p.shape.input_dim) throw shape_error("input dimension mismatch");
    ForwardPass fp;
    fp.features.push_back(x);
    for (int l = 0; l < p.shape.depth(); ++l) {
        Vec z = matvec(p.W[l], fp.features.back());
        axpy(1.0, p.b[l], z);
        fp.features.push_back(leaky_relu_vec(z, p.shape.alpha));
    }
    fp.output = matvec(p.V, fp.features.back());
    axpy(1.0, p.c, fp.output);
    return fp;
}

double hinge_binary(double y_hat, int y) { return std::max(0.0, 1.0 - double(y) * y_hat); }

double hinge_multi(const Vec& y_hat, int true_class) {
    if (true_class < 0 || true_class >= int(y_hat.size()))
        throw shape_error("true class out of range");
    double s = 0.0;
    for (int r = 0; r < int(y_hat.size()); ++r) {
        if (r == true_class) continue;
        s += std::max(0.0, 1.0 + y_hat[r] - y_hat[true_class]);
    }
    return s;
}

double hinge_multi_onehot(const Vec& y_hat, const Vec& y) {
    if (y.size() != y_hat.size()) throw shape_error("target length mismatch");
    double proj = dot(y, y_hat);
    double s = -1.0;
    for (double v : y_hat) s += std::max(0.0, 1.0 + v - proj);
    return s;
}

double point_loss(const Params& p, const LabeledDataset& data, int i) {
    ForwardPass fp = forward(p, data.points[i]);
    if (data.mode == LabelMode::Binary) {
        if (p.shape.output_dim != 1) throw shape_error("binary mode needs scalar output");
        return hinge_binary(fp.output[0], data.label_sign(i));
    }
    if (p.shape.output_dim != data.num_classes)
        throw shape_error("output dim must equal class count");
    return hinge_multi_onehot(fp.output, data.onehot(i));
}

double total_loss(const Params& p, const LabeledDataset& data) {
    double s = 0.0;
    for (int i = 0; i < data.size(); ++i) s += data.weights[i] * point_loss(p, data, i);
    return s;
}

double per_class_loss(const Params& p, const LabeledDataset& data, int r,
                      const Matrix* per_class_weights) {
    if (data.mode != LabelMode::MultiClass)
        throw unsupported_configuration("one-versus-all criterion needs multiclass data");
    if (r < 0 || r >= data.num_classes) throw shape_error("class index out of range");
    if (p.shape.output_dim != data.num_classes)
        throw shape_error("output dim must equal class count");
    double s = 0.0;
    for (int i = 0; i < data.size(); ++i) {
        ForwardPass fp = forward(p, data.points[i]);
        double w = per_class_weights ? (*per_class_weights)(i, r) : data.weights[i];
        int yir = data.class_of(i) == r ? 1 : -1;
        s += w * hinge_binary(fp.output[r], yir);
    }
    return s;
}

double ova_loss(const Params& p, const LabeledDataset& data, const Matrix* per_class_weights) {
    double s = 0.0;
    for (int r = 0; r < data.num_classes; ++r) s += per_class_loss(p, data, r, per_class_weights);
    return s;
}

LabeledDataset one_vs_rest(const LabeledDataset& data, int r, const Matrix* per_class_weights) {
    if (data.mode != LabelMode::MultiClass)
        throw unsupported_configuration("one_vs_rest needs multiclass data");
    LabeledDataset d;
    d.mode = LabelMode::Binary;
    d.points = data.points;
    d.labels.resize(data.size());
    d.weights.resize(data.size());
    for (int i = 0; i < data.size(); ++i) {
        d.labels[i] = data.class_of(i) == r ? 1 : -1;
        d.weights[i] = per_class_weights ? (*per_class_weights)(i, r) : data.weights[i];
    }
    return d;
}

}  // namespace lscape
