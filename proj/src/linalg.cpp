#include "lscape/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <thread>

namespace lscape {

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

void axpy(double a, const Vec& x, Vec& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a);
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Vec operator*(double a, const Vec& x) {
    Vec r(x);
    for (double& v : r) v *= a;
    return r;
}

Vec matvec(const Matrix& A, const Vec& x) {
    Vec y(A.rows, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        double s = 0.0;
        for (int j = 0; j < A.cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vec matvec_t(const Matrix& A, const Vec& x) {
    Vec y(A.cols, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        for (int j = 0; j < A.cols; ++j) y[j] += r[j] * x[i];
    }
    return y;
}

void add_outer(Matrix& A, const Vec& u, const Vec& v, double scale) {
    for (int i = 0; i < A.rows; ++i) {
        double ui = scale * u[i];
        double* r = A.row(i);
        for (int j = 0; j < A.cols; ++j) r[j] += ui * v[j];
    }
}

Vec symmetric_eigenvalues(Matrix A) {
    const int n = A.rows;
    double scale = 0.0;
    for (double v : A.data) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return Vec(n, 0.0);

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += A(i, j) * A(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > 1e-13 * scale * n; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (std::fabs(apq) <= 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vec eig(n);
    for (int i = 0; i < n; ++i) eig[i] = A(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void Hash64::add_double(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    add(bits);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
    Vec v(n);
    for (double& x : v) x = uniform(rng, lo, hi);
    return v;
}

Vec ball_point(std::mt19937_64& rng, int dim, double radius) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec d(dim);
    double n = 0.0;
    do {
        for (double& x : d) x = gauss(rng);
        n = norm2(d);
    } while (n < 1e-300);
    double r = radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / dim);
    for (double& x : d) x *= r / n;
    return d;
}

void parallel_for(int n, const std::function<void(int)>& body, int max_threads) {
    int hw = max_threads > 0 ? max_threads : int(std::thread::hardware_concurrency());
    hw = std::max(1, std::min(hw, n));
    if (hw == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < hw; ++t) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace lscape
