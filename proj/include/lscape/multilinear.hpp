#pragma once

#include "lscape/cells.hpp"

namespace lscape {

/// Per-point diagonal coefficients that freeze a cell's linear structure:
/// hidden slopes in {alpha, 1} and loss-layer gates in {0, 1}. Derived
/// deterministically from a cell's signs (+1 -> slope 1 / gate 1).
struct FrozenActivation {
    double alpha = 0.0;
    std::vector<std::vector<Vec>> hidden_slopes;  // [point][layer][unit]
    std::vector<Vec> loss_gates;                  // [point][output]
};

FrozenActivation frozen_from_cell(const CellId& u, const NetworkShape& shape);
FrozenActivation frozen_from_signs(const std::vector<std::int8_t>& signs,
                                   const NetworkShape& shape);

/// Loss with every nonlinearity replaced by the frozen diagonal coefficients.
/// Equals total_loss whenever the parameters lie in the frozen cell.
double cell_loss(const Params& p, const FrozenActivation& f, const LabeledDataset& data);

/// Exact gradient of cell_loss (reverse accumulation through the frozen
/// linear graph), in Params::flatten layout.
Vec cell_gradient(const Params& p, const FrozenActivation& f, const LabeledDataset& data);

/// Hessian of cell_loss by central differences of the exact gradient,
/// symmetrized.
Matrix cell_hessian(const Params& p, const FrozenActivation& f, const LabeledDataset& data,
                    double h = 1e-5);

/// Gradient (flat layout) of a single pre-activation / hinge-argument
/// coordinate under the frozen linearization.
Vec frozen_coord_gradient(const Params& p, const LabeledDataset& data,
                          const FrozenActivation& f, const ZeroCoord& coord);

/// Closed-form coefficients of the one-hidden-layer binary cell loss:
/// loss = constant - sum_k v_k (<unit_input_coeff_k, w_k> + unit_bias_coeff_k b_k)
///        - output_bias_coeff * c.
struct CellDecomposition {
    std::vector<Vec> unit_input_coeff;
    Vec unit_bias_coeff;
    double output_bias_coeff = 0.0;
    double constant = 0.0;

    double evaluate(const Params& p) const;
};

CellDecomposition decompose_one_hidden(const LabeledDataset& data, const FrozenActivation& f);

/// True iff every non-constant form of the one-hidden-layer decomposition
/// vanishes identically, i.e. the cell loss is constant.
bool flat_cell_coeff_test(const CellDecomposition& dec, double tol);

/// Sampled flatness test for general depth: rejection-sample m in-cell points
/// from shrinking balls around a known member, require vanishing gradient and
/// constant loss.
bool flat_cell_sampled_test(const Params& member, const CellId& u, const LabeledDataset& data,
                            int m_samples, std::mt19937_64& rng);

/// Residuals of the weighted error-moment balance system over all classes:
/// the vector family (with data points), the slope-weighted scalar family,
/// and the weight-only scalar family.
struct MomentBalance {
    double vector_family = 0.0;
    double slope_family = 0.0;
    double weight_family = 0.0;
};
MomentBalance error_moment_residuals(const LabeledDataset& data, const Matrix& eps,
                                     const Vec& lambdas);

/// True iff all three equality families hold within tol; characterizes cells
/// on which the loss is constant in terms of the data alone.
bool flat_cell_condition(const LabeledDataset& data, const Matrix& eps, const Vec& lambdas,
                         double tol = 1e-10);

}  // namespace lscape
