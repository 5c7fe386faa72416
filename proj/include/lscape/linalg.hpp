#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace lscape {

using Vec = std::vector<double>;

/// Dense row-major matrix, sized for desk-scale problems.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * c, fill) {}

    double& operator()(int i, int j) { return data[size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return data[size_t(i) * cols + j]; }

    const double* row(int i) const { return data.data() + size_t(i) * cols; }
    double* row(int i) { return data.data() + size_t(i) * cols; }
};

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double norm_inf(const Vec& a);
void axpy(double a, const Vec& x, Vec& y);  // y += a*x
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double a, const Vec& x);

Vec matvec(const Matrix& A, const Vec& x);
Vec matvec_t(const Matrix& A, const Vec& x);       // A^T x
void add_outer(Matrix& A, const Vec& u, const Vec& v, double scale = 1.0);  // A += scale * u v^T

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending order.
Vec symmetric_eigenvalues(Matrix A);

/// Fixed 64-bit mixing function (splitmix64 finalizer); used for content hashes.
std::uint64_t mix64(std::uint64_t x);

/// Chained content hash over a byte-packed word sequence.
struct Hash64 {
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    void add(std::uint64_t word) { state = mix64(state ^ word); }
    void add_double(double v);
    std::uint64_t get() const { return state; }
};

double uniform(std::mt19937_64& rng, double lo, double hi);
Vec uniform_vec(std::mt19937_64& rng, int n, double lo, double hi);
/// Uniform point in the ball of given radius (by direction + radial cdf).
Vec ball_point(std::mt19937_64& rng, int dim, double radius);

/// Simple index-chunked parallel loop; preserves determinism (no shared state).
void parallel_for(int n, const std::function<void(int)>& body, int max_threads = 0);

}  // namespace lscape
