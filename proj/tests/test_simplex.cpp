#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fitzbr/simplex.hpp"
#include "oracles.hpp"

using namespace fitzbr;

TEST_CASE("hull value at vertices and midpoints") {
    // epigraph points of f(x) = x^2 at x in {-1, 0, 1}
    Mat pts(1, 3);
    pts << -1, 0, 1;
    Vec vals(3);
    vals << 1, 0, 1;
    CHECK(lower_hull_value(pts, vals, Vec::Constant(1, 0.0)).value() == doctest::Approx(0.0));
    CHECK(lower_hull_value(pts, vals, Vec::Constant(1, 1.0)).value() == doctest::Approx(1.0));
    CHECK(lower_hull_value(pts, vals, Vec::Constant(1, 0.5)).value() == doctest::Approx(0.5));
    CHECK(lower_hull_value(pts, vals, Vec::Constant(1, 2.0)).is_pos_inf());
}

TEST_CASE("hull of the pairing over a 2-D corner set") {
    Mat pts(2, 4);
    pts << 0, 1, 0, 1, 0, 0, 1, 1;
    Vec vals(4);
    vals << 0, 0, 0, 1;  // x*y at the corners
    // center: the antidiagonal pair gives 0
    CHECK(lower_hull_value(pts, vals, (Vec(2) << 0.5, 0.5).finished()).value() ==
          doctest::Approx(0.0));
    CHECK(lower_hull_value(pts, vals, (Vec(2) << 1.0, 1.0).finished()).value() ==
          doctest::Approx(1.0));
    CHECK(lower_hull_value(pts, vals, (Vec(2) << 1.5, 0.5).finished()).is_pos_inf());
}

TEST_CASE("hull value matches a dense convex-combination sweep") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Mat pts(2, 5);
        Vec vals(5);
        for (int i = 0; i < 5; ++i) {
            pts.col(i) = oracle::rand_vec(rng, 2, 1.0);
            vals(i) = oracle::rand_vec(rng, 1, 1.0)(0);
        }
        // query inside: a random convex combination
        Vec w(5);
        for (int i = 0; i < 5; ++i) w(i) = std::uniform_real_distribution<>(0.01, 1.0)(rng);
        w /= w.sum();
        Vec q = pts * w;
        ExtReal got = lower_hull_value(pts, vals, q);
        REQUIRE(got.is_finite());
        CHECK(got.value() <= vals.dot(w) + 1e-8);
        // oracle: by Caratheodory in the plane the optimum uses at most 3
        // points; enumerate every support exactly
        double best = oracle::kInf;
        for (int i = 0; i < 5; ++i)
            for (int j = i; j < 5; ++j)
                for (int k = j; k < 5; ++k) {
                    Mat S(3, 3);
                    S << pts(0, i), pts(0, j), pts(0, k), pts(1, i), pts(1, j), pts(1, k), 1, 1, 1;
                    Vec rhs(3);
                    rhs << q(0), q(1), 1.0;
                    Eigen::FullPivLU<Mat> lu(S);
                    if (lu.rank() < 3) continue;
                    Vec lam = lu.solve(rhs);
                    if (lam.minCoeff() < -1e-10) continue;
                    if ((S * lam - rhs).lpNorm<Eigen::Infinity>() > 1e-9) continue;
                    double v = lam(0) * vals(i) + lam(1) * vals(j) + lam(2) * vals(k);
                    best = std::min(best, v);
                }
        REQUIRE(best < oracle::kInf);
        CHECK(got.value() == doctest::Approx(best).epsilon(1e-7));
    }
}

TEST_CASE("simplex qp agrees with a dense sweep") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        int N = 3 + static_cast<int>(rng() % 3);  // 3..5 columns
        Mat G(2, N);
        Vec c(N);
        for (int i = 0; i < N; ++i) {
            G.col(i) = oracle::rand_vec(rng, 2, 2.0);
            c(i) = oracle::rand_vec(rng, 1, 1.0)(0);
        }
        auto res = simplex_qp(G, c);
        // feasibility
        CHECK(res.lambda.minCoeff() >= -1e-12);
        CHECK(res.lambda.sum() == doctest::Approx(1.0).epsilon(1e-10));
        // objective value is consistent
        double obj = 0.5 * (G * res.lambda).squaredNorm() + c.dot(res.lambda);
        CHECK(obj == doctest::Approx(res.value).epsilon(1e-10));
        // sweep oracle over the simplex with a recursive lattice
        double best = oracle::kInf;
        const int S = 30;
        std::function<void(int, int, Vec&)> rec = [&](int i, int left, Vec& lam) {
            if (i == N - 1) {
                lam(i) = static_cast<double>(left) / S;
                best = std::min(best, 0.5 * (G * lam).squaredNorm() + c.dot(lam));
                return;
            }
            for (int k = 0; k <= left; ++k) {
                lam(i) = static_cast<double>(k) / S;
                rec(i + 1, left - k, lam);
            }
        };
        Vec lam(N);
        rec(0, S, lam);
        CHECK(res.value <= best + 1e-9);
        // KKT: no simplex vertex improves along the gradient
        Vec grad = G.transpose() * (G * res.lambda) + c;
        double level = grad.dot(res.lambda);  // support value
        CHECK(grad.minCoeff() >= level - 1e-8);
    }
}

TEST_CASE("simplex qp on a single column") {
    Mat G(3, 1);
    G << 1, 2, 3;
    Vec c(1);
    c << -1;
    auto res = simplex_qp(G, c);
    CHECK(res.lambda(0) == doctest::Approx(1.0));
    CHECK(res.value == doctest::Approx(0.5 * 14.0 - 1.0));
}
