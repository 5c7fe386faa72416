#pragma once

#include <cstdint>
#include <optional>

#include "lscape/core.hpp"

namespace lscape {

inline constexpr double kDefaultTau = 1e-9;     // zero-detection half-width
inline constexpr int kDefaultMaxZeros = 20;

/// Coordinate of one signature entry: data point, layer (1..L hidden,
/// L+1 for the loss layer), and neuron / class index within the layer.
struct ZeroCoord {
    int point = 0;
    int layer = 0;
    int index = 0;
    bool operator==(const ZeroCoord&) const = default;
};

/// Ternary activation pattern of every nonlinearity across all data points.
/// Entries are stored point-major, within a point hidden layers first, then
/// the loss layer.
struct Signature {
    int n_points = 0;
    int width = 0;  // D = d_1 + ... + d_{L+1}
    std::vector<std::int8_t> s;

    std::int8_t at(int point, int offset) const { return s[size_t(point) * width + offset]; }
    bool smooth() const;
    int zero_count() const;
    std::vector<ZeroCoord> zeros(const NetworkShape& shape) const;
};

/// All-nonzero cell identifier with a stable content hash. Entries are packed
/// sign-bit-per-neuron in (point, layer, neuron) order and folded through a
/// fixed 64-bit mixing function, so hashes are reproducible across runs.
struct CellId {
    std::vector<std::int8_t> s;
    std::uint64_t hash = 0;
    bool operator==(const CellId& o) const { return s == o.s; }
};

CellId cell_from_signs(std::vector<std::int8_t> signs);

struct BoundaryReport {
    std::vector<ZeroCoord> zeros;
    Vec functional_norms;     // norm of each zero's linearized functional
    bool degenerate = false;  // some functional norm < 1e-12 (possible under-enumeration)
};

Signature signature(const Params& p, const LabeledDataset& data, double tau = kDefaultTau);

struct CellQuery {
    std::optional<CellId> cell;           // set when the point is smooth
    std::optional<BoundaryReport> report; // set otherwise
};
CellQuery cell_of(const Params& p, const LabeledDataset& data, double tau = kDefaultTau);

/// Cells whose closures contain the given point, enumerated by completing the
/// zero signature entries. A completion is kept when a first-order feasibility
/// LP over perturbation directions has strictly positive slack, or when one of
/// 64 random small perturbations realizes it exactly.
std::vector<CellId> incidence_set(const Params& p, const LabeledDataset& data,
                                  double tau = kDefaultTau, int max_zeros = kDefaultMaxZeros);

}  // namespace lscape
