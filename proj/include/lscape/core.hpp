#pragma once

#include "lscape/errors.hpp"
#include "lscape/linalg.hpp"

namespace lscape {

enum class LabelMode { Binary, MultiClass };

/// Weighted classification dataset. Binary mode carries +/-1 labels and a
/// scalar-output network; multiclass mode carries one-hot targets over
/// num_classes outputs. The two are distinct criteria and never converted
/// silently.
struct LabeledDataset {
    LabelMode mode = LabelMode::Binary;
    std::vector<Vec> points;
    std::vector<int> labels;   // Binary: -1/+1; MultiClass: 0-based class index
    int num_classes = 0;       // MultiClass only, R >= 2
    Vec weights;               // mu, positive

    int size() const { return int(points.size()); }
    int dim() const { return points.empty() ? 0 : int(points.front().size()); }
    int label_sign(int i) const { return labels[i]; }
    int class_of(int i) const { return labels[i]; }
    Vec onehot(int i) const;

    void validate() const;       // throws shape_error on broken invariants
    void normalize_weights();    // rescale so weights sum to one
};

LabeledDataset make_binary(std::vector<Vec> points, std::vector<int> labels, Vec weights = {});
LabeledDataset make_multiclass(std::vector<Vec> points, std::vector<int> classes, int num_classes,
                               Vec weights = {});

struct NetworkShape {
    int input_dim = 0;
    std::vector<int> hidden;   // d_1 .. d_L
    int output_dim = 1;        // R (1 in binary mode)
    double alpha = 0.0;        // leak slope in [0,1]
    bool output_bias = true;   // when false, c is fixed at zero and not a parameter

    int depth() const { return int(hidden.size()); }                // L
    int layer_dim(int l) const;                                     // d_l, l in 0..L+1
    int neuron_count() const;                                       // D = d_1+..+d_{L+1}
    void validate() const;
};

/// All network parameters (W^(1..L), b^(1..L), V, c).
struct Params {
    NetworkShape shape;
    std::vector<Matrix> W;
    std::vector<Vec> b;
    Matrix V;
    Vec c;

    static Params zeros(const NetworkShape& s);
    static Params random(const NetworkShape& s, double half_width, std::mt19937_64& rng);

    int flat_size() const;     // trainable parameter count (c excluded if !output_bias)
    Vec flatten() const;
    void unflatten(const Vec& flat);
    void validate() const;
};

double leaky_relu(double x, double alpha);
Vec leaky_relu_vec(const Vec& x, double alpha);

struct ForwardPass {
    std::vector<Vec> features;  // x^(0) .. x^(L)
    Vec output;                 // yhat, length output_dim
};
ForwardPass forward(const Params& p, const Vec& x);

double hinge_binary(double y_hat, int y);
/// Multiclass hinge, sum form: sum_{r != r0} max(0, 1 + yhat_r - yhat_r0).
double hinge_multi(const Vec& y_hat, int true_class);
/// Same criterion in vector form: -1 + <1, max(0, (Id - 1 (x) y) yhat + 1)>.
double hinge_multi_onehot(const Vec& y_hat, const Vec& y);

double point_loss(const Params& p, const LabeledDataset& data, int i);
double total_loss(const Params& p, const LabeledDataset& data);

/// One-versus-all criterion over shared features. Per-class weights default
/// to the dataset weights replicated across classes.
double per_class_loss(const Params& p, const LabeledDataset& data, int r,
                      const Matrix* per_class_weights = nullptr);
double ova_loss(const Params& p, const LabeledDataset& data,
                const Matrix* per_class_weights = nullptr);

/// Binary view of class r under the one-versus-all criterion: labels +1 for
/// class r, -1 otherwise, weights mu^(i,r).
LabeledDataset one_vs_rest(const LabeledDataset& data, int r,
                           const Matrix* per_class_weights = nullptr);

}  // namespace lscape
