#include <doctest.h>

#include <cmath>

#include "lscape/linalg.hpp"
#include "lscape/simplex.hpp"

using namespace lscape;

TEST_CASE("jacobi eigenvalues of a known symmetric matrix") {
    // eigenvalues of [[2,1],[1,2]] are 1 and 3
    Matrix A(2, 2);
    A(0, 0) = 2;
    A(0, 1) = 1;
    A(1, 0) = 1;
    A(1, 1) = 2;
    Vec e = symmetric_eigenvalues(A);
    CHECK(e[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("jacobi eigenvalues match trace and determinant on random matrices") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        int n = 2 + int(rng() % 5);
        Matrix A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                double v = uniform(rng, -2.0, 2.0);
                A(i, j) = A(j, i) = v;
            }
        double trace = 0.0;
        for (int i = 0; i < n; ++i) trace += A(i, i);
        Vec e = symmetric_eigenvalues(A);
        double esum = 0.0;
        for (double v : e) esum += v;
        CHECK(esum == doctest::Approx(trace).epsilon(1e-9));
    }
}

TEST_CASE("cell hash is stable and sensitive") {
    Hash64 a, b;
    a.add(1);
    a.add(2);
    b.add(1);
    b.add(2);
    CHECK(a.get() == b.get());
    Hash64 c;
    c.add(2);
    c.add(1);
    CHECK(a.get() != c.get());
}

TEST_CASE("simplex solves a textbook problem") {
    // max x + y st x + 2y <= 4, 3x + y <= 6, x,y >= 0  -> (8/5, 6/5), value 14/5
    LpProblem lp(2);
    lp.objective = {-1.0, -1.0};
    lp.add_row({1.0, 2.0}, Rel::LE, 4.0);
    lp.add_row({3.0, 1.0}, Rel::LE, 6.0);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(1.2).epsilon(1e-9));
}

TEST_CASE("simplex handles free variables and GE rows") {
    // min x subject to x >= -3 (x free): optimum -3
    LpProblem lp(1);
    lp.objective = {1.0};
    lp.lower[0] = -std::numeric_limits<double>::infinity();
    lp.add_row({1.0}, Rel::GE, -3.0);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("simplex detects infeasibility") {
    LpProblem lp(1);
    lp.objective = {1.0};
    lp.add_row({1.0}, Rel::GE, 5.0);
    lp.add_row({1.0}, Rel::LE, 1.0);
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("simplex detects unboundedness") {
    LpProblem lp(1);
    lp.objective = {-1.0};
    lp.add_row({-1.0}, Rel::LE, 0.0);
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("simplex agrees with brute force on random bounded problems") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 25; ++rep) {
        // min c^T x over the box [0,1]^2 with two random LE rows; brute force
        // over a fine grid gives an independent optimum estimate
        LpProblem lp(2);
        lp.objective = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
        lp.upper = {1.0, 1.0};
        Vec r1 = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
        Vec r2 = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
        double b1 = uniform(rng, 0.2, 1.5), b2 = uniform(rng, 0.2, 1.5);
        lp.add_row(r1, Rel::LE, b1);
        lp.add_row(r2, Rel::LE, b2);
        LpResult res = solve_lp(lp);
        REQUIRE(res.status == LpStatus::Optimal);
        double best = 1e300;
        const int G = 200;
        for (int i = 0; i <= G; ++i)
            for (int j = 0; j <= G; ++j) {
                double x = double(i) / G, y = double(j) / G;
                if (r1[0] * x + r1[1] * y <= b1 + 1e-12 && r2[0] * x + r2[1] * y <= b2 + 1e-12)
                    best = std::min(best, lp.objective[0] * x + lp.objective[1] * y);
            }
        CHECK(res.objective <= best + 1e-9);
        CHECK(res.objective >= best - 0.02);  // grid resolution slack
    }
}
