#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fitzbr/errors.hpp"
#include "fitzbr/refine.hpp"
#include "oracles.hpp"

using namespace fitzbr;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }
ConvexFunction half_sq() {
    return ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
}
ConvexFunction half_sq_plus_x() {
    return ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Ones(1), 0.0);
}
}  // namespace

TEST_CASE("regularized minimization: trivial branch") {
    auto h = Bifunction::separable(half_sq());
    auto sol = regularized_min(h, 0.1);
    CHECK(sol.point.x.norm() == 0.0);
    CHECK(sol.point.xstar.norm() == 0.0);
    CHECK(sol.value == doctest::Approx(0.0));
    CHECK(sol.norm_bound == doctest::Approx(0.0));
}

TEST_CASE("regularized minimization: shifted quadratic") {
    // f(x) = x^2/2 + x, T: x -> x + 1; exact minimizer (-1/2, 1/2)
    auto h = Bifunction::separable(half_sq_plus_x());
    auto sol = regularized_min(h, 1e-7);
    CHECK(sol.point.x(0) == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(sol.point.xstar(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(sol.value) <= 1e-9);
    CHECK(sol.norm_bound == doctest::Approx(0.5));
    CHECK(sol.point.x.squaredNorm() <= sol.norm_bound + 1e-9);
    CHECK(sol.point.xstar.squaredNorm() <= sol.norm_bound + 1e-9);
    // dual certificate: norms equal and tied to -h* at the certificate
    CHECK(sol.certificate_value <= 1e-9);
    CHECK(sol.dual_certificate.x.norm() ==
          doctest::Approx(sol.dual_certificate.xstar.norm()).epsilon(1e-6));
    auto hs = h.conjugate();
    Vec w(2);
    w << sol.dual_certificate.x(0), sol.dual_certificate.xstar(0);
    CHECK(sol.dual_certificate.x.squaredNorm() ==
          doctest::Approx(-hs.eval_stacked(w).value()).epsilon(1e-6));
}

TEST_CASE("regularized minimization: abs has the origin on its graph") {
    auto h = Bifunction::separable(ConvexFunction::abs_norm(1));
    auto sol = regularized_min(h, 0.1);
    CHECK(sol.point.x.norm() == 0.0);
    CHECK(sol.value == doctest::Approx(0.0));
}

TEST_CASE("regularized minimization: unbounded branch") {
    // sigma of x -> x + 1 is infinite at the origin
    auto T = MonotoneOperator::affine(Mat::Identity(1, 1), Vec::Ones(1));
    auto sig = Bifunction::sigma(T);
    auto sol = regularized_min(sig, 0.01);
    CHECK_FALSE(sol.norm_bound_claimed);
    CHECK(sol.value < 0.01);
    // exact minimizer of 2t^2 + 2t + 1/2 over the graph line (t, t+1): t=-1/2
    CHECK(sol.point.x(0) == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(sol.point.xstar(0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("zero optimum across representations satisfying the dual condition") {
    std::vector<Bifunction> hs;
    hs.push_back(Bifunction::separable(half_sq()));
    hs.push_back(Bifunction::fitzpatrick(MonotoneOperator::identity(1)));
    hs.push_back(Bifunction::fitzpatrick(MonotoneOperator::identity(2)));
    hs.push_back(Bifunction::separable(ConvexFunction::abs_norm(1)));
    hs.push_back(Bifunction::fitzpatrick(
        MonotoneOperator::subdifferential(ConvexFunction::abs_norm(1))));
    hs.push_back(Bifunction::fitzpatrick(MonotoneOperator::rotation2d()));
    for (const auto& h : hs) {
        auto in = h.min_shifted_reg(Vec::Zero(2 * h.n()), Vec::Zero(2 * h.n()));
        CHECK(std::abs(in.value) <= 1e-9);  // inf h + |.|^2/2 = 0
        auto sol = regularized_min(h, 1e-3);
        CHECK(sol.value <= 1e-3);
        CHECK(sol.value >= -1e-9);
        CHECK(sol.certificate_value <= 1e-9);
        CHECK(sol.dual_certificate.x.norm() ==
              doctest::Approx(sol.dual_certificate.xstar.norm()).epsilon(1e-6));
    }
}

TEST_CASE("br step examples") {
    auto h = Bifunction::separable(half_sq());
    // on the graph: returns z itself
    auto z0 = make_point({0.7}, {0.7});
    auto r0 = br_step(h, z0, 0.05);
    CHECK((r0.x - z0.x).norm() == 0.0);

    // off the graph: the exact inner solution lands on the diagonal at 1/2
    auto z = make_point({0.0}, {1.0});
    auto r = br_step(h, z, 0.05);
    CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.xstar(0) == doctest::Approx(0.5).epsilon(1e-9));
    double gap = h.eval(r).value() - duality_product(r);
    CHECK(gap < 0.05);
    double gz = h.eval(z).value() - duality_product(z);
    CHECK((r.x - z.x).squaredNorm() <= gz + 1e-9);
    CHECK((r.xstar - z.xstar).squaredNorm() <= gz + 1e-9);
    // oracle: the translated regularized objective has a zero infimum
    auto obj = [&](const Vec& u) {
        PrimalDualPoint p(u.segment(0, 1) + z.x, u.segment(1, 1) + z.xstar);
        double corr = -u(0) * z.xstar(0) - z.x(0) * u(1) - duality_product(z);
        return h.eval(p).value() + corr + 0.5 * u.squaredNorm();
    };
    auto [best, arg] = oracle::min_sweep(obj, 2, 2.0, 401);
    CHECK(best >= -1e-9);
    CHECK(best <= 1e-3);
}

TEST_CASE("br step on the fitzpatrick of the identity") {
    auto h = Bifunction::fitzpatrick(MonotoneOperator::identity(1));
    auto z = make_point({0.0}, {1.0});
    auto r = br_step(h, z, 0.05);
    double gap = h.eval(r).value() - duality_product(r);
    CHECK(gap < 0.05);
    double gz = 0.25;  // phi(0,1) - 0
    CHECK((r.x - z.x).squaredNorm() <= gz + 1e-9);
    CHECK((r.xstar - z.xstar).squaredNorm() <= gz + 1e-9);
}

TEST_CASE("br refine: trivial, regular and rejected starts") {
    auto h = Bifunction::separable(half_sq());
    auto tr0 = br_refine(h, make_point({0.5}, {0.5}), 0.1);
    CHECK(tr0.completed);
    CHECK(tr0.iterates.size() == 1);
    CHECK(tr0.limit.x(0) == doctest::Approx(0.5));

    auto p = make_point({0.0}, {1.0});
    auto tr = br_refine(h, p, 0.6);
    CHECK(tr.completed);
    CHECK(tr.eps0 == doctest::Approx(0.5));
    CHECK(std::abs(tr.limit.x(0) - tr.limit.xstar(0)) < 1e-6);
    CHECK(std::abs(tr.limit.x(0) - 0.0) < std::sqrt(0.6));
    CHECK(std::abs(tr.limit.xstar(0) - 1.0) < std::sqrt(0.6));
    CHECK(tr.limit.x(0) == doctest::Approx(0.5).epsilon(1e-6));
    for (std::size_t k = 0; k < tr.gaps.size(); ++k)
        CHECK(tr.gaps[k] < std::pow(tr.theta, static_cast<double>(k)) * tr.eps0 + 1e-8);
    for (bool ok : tr.step_bounds_ok) CHECK(ok);

    CHECK_THROWS_AS(br_refine(h, p, 0.5), PreconditionError);
}

TEST_CASE("br refine scaled: neutral scale and the feasibility window") {
    auto h = Bifunction::separable(half_sq());
    auto p = make_point({0.0}, {1.0});
    auto t1 = br_refine(h, p, 0.6);
    auto t2 = br_refine_scaled(h, p, 0.6, std::sqrt(0.6));
    CHECK((t1.limit.x - t2.limit.x).norm() < 1e-9);
    CHECK((t1.limit.xstar - t2.limit.xstar).norm() < 1e-9);

    // the gap-1/4 start: fitzpatrick of the identity at (0, 1)
    auto hf = Bifunction::fitzpatrick(MonotoneOperator::identity(1));
    auto t3 = br_refine_scaled(hf, p, 0.26, 0.5);
    CHECK(t3.completed);
    double t = t3.limit.x(0);
    CHECK(std::abs(t3.limit.xstar(0) - t) < 1e-6);
    CHECK(std::abs(t - 0.0) < 0.5);
    CHECK(std::abs(t - 1.0) < 0.26 / 0.5);
    CHECK(t > 0.48);
    CHECK(t < 0.5);
}

TEST_CASE("strict br on the identity: the hand-computed window") {
    auto id = MonotoneOperator::identity(1);
    auto p = make_point({0.0}, {1.0});
    auto res = strict_br(id, p, 0.25, 0.3, 0.5);
    double t = res.point.x(0);
    CHECK(res.point.xstar(0) == doctest::Approx(t).epsilon(1e-9));
    CHECK(t > 0.4);
    CHECK(t < 0.5);
    // the one-step exact path lands at lambda^2/(lambda^2 + eta)
    CHECK(t == doctest::Approx(0.25 / 0.55).epsilon(1e-6));
    CHECK(std::abs(res.point.x(0) - 0.0) < 0.5);
    CHECK(std::abs(res.point.xstar(0) - 1.0) < 0.3 / 0.5);
    CHECK(res.snap_distance < 1e-8);

    auto on = make_point({0.3}, {0.3});
    auto res2 = strict_br(id, on, 0.1, 0.2, 1.0);
    CHECK(res2.point.x(0) == doctest::Approx(0.3).epsilon(1e-9));

    CHECK_THROWS_AS(strict_br(id, p, 0.25, 0.25, 0.5), PreconditionError);
    CHECK_THROWS_AS(strict_br(id, p, 0.2, 0.3, 0.5), PreconditionError);
}

TEST_CASE("strict br on a finely sampled rotation graph") {
    std::vector<PrimalDualPoint> g;
    for (int i = 0; i < 64; ++i) {
        double a = 2.0 * M_PI * i / 64;
        for (double r : {0.5, 1.0, 1.5}) {
            Vec x(2), xs(2);
            x << r * std::cos(a), r * std::sin(a);
            xs << -x(1), x(0);
            g.emplace_back(x, xs);
        }
    }
    auto T = MonotoneOperator::sampled_graph(g);
    Vec px(2), ps(2);
    px << 1.02, 0.03;
    ps << -0.03, 0.98;
    PrimalDualPoint p(px, ps);
    auto enl = eps_enlargement_test(T, p, 0.0);
    REQUIRE(enl.inf_value.is_finite());
    double eps = std::max(0.0, -enl.inf_value.value()) + 1e-6;
    double eta = 2.0 * eps + 1e-3, lambda = 0.6;
    auto res = strict_br(T, p, eps, eta, lambda);
    CHECK(T.eval_at(res.point.x).contains(res.point.xstar, 1e-9));
    CHECK((res.point.x - p.x).norm() < lambda + res.snap_distance);
    CHECK((res.point.xstar - p.xstar).norm() < eta / lambda + res.snap_distance);
}

TEST_CASE("geometric decay and step law over seeded instances") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> ratio(0.1, 0.9);
    int runs = 0;
    for (int t = 0; t < 60; ++t) {
        Bifunction h = [&]() {
            switch (t % 3) {
                case 0: return Bifunction::separable(half_sq());
                case 1: return Bifunction::fitzpatrick(MonotoneOperator::identity(1));
                default: return Bifunction::separable(ConvexFunction::abs_norm(1));
            }
        }();
        PrimalDualPoint p(oracle::rand_vec(rng, 1, 1.5), oracle::rand_vec(rng, 1, 0.9));
        ExtReal hv = h.eval(p);
        if (!hv.is_finite()) continue;
        double gap = hv.value() - duality_product(p);
        if (gap <= 1e-6) continue;
        double eps = gap / ratio(rng);
        auto tr = br_refine(h, p, eps);
        REQUIRE(tr.completed);
        ++runs;
        for (std::size_t k = 0; k < tr.gaps.size(); ++k)
            CHECK(tr.gaps[k] < std::pow(tr.theta, static_cast<double>(k)) * tr.eps0 + 1e-8);
        for (bool ok : tr.step_bounds_ok) CHECK(ok);
        CHECK(std::abs(tr.limit.x(0) - p.x(0)) < std::sqrt(eps));
        CHECK(std::abs(tr.limit.xstar(0) - p.xstar(0)) < std::sqrt(eps));
        CHECK(tr.gaps.back() <= 1e-8);
    }
    CHECK(runs > 30);
}

TEST_CASE("maximality probe at a graph point and a subsampled target") {
    auto h = Bifunction::separable(half_sq());
    std::vector<PrimalDualPoint> sample;
    for (int i = 0; i <= 40; ++i) {
        double t = -2.0 + 0.1 * i;
        if (std::abs(t - 0.5) < 0.049) continue;
        sample.push_back(make_point({t}, {t}));
    }
    auto z = make_point({0.5}, {0.5});
    auto res = maximality_probe(h, z, sample);
    CHECK_FALSE(res.rejected);
    CHECK(res.verdict);
    CHECK(res.distances.back() <= tol::probe);
    CHECK(res.steps <= 200);

    std::vector<PrimalDualPoint> full;
    for (int i = 0; i <= 40; ++i) full.push_back(make_point({-2.0 + 0.1 * i}, {-2.0 + 0.1 * i}));
    auto bad = maximality_probe(h, make_point({0.0}, {1.0}), full);
    CHECK(bad.rejected);
    CHECK(bad.precondition_inf == doctest::Approx(-0.25).epsilon(1e-9));
    REQUIRE(bad.precondition_witness.has_value());
    CHECK(bad.precondition_witness->x(0) == doctest::Approx(0.5));
}

TEST_CASE("equality graph sampling finds the diagonal") {
    auto h = Bifunction::separable(half_sq());
    auto eq = equality_graph_sample(h, TestGrid{2.0, 41});
    CHECK(eq.size() == 41);
    for (const auto& p : eq) CHECK(p.x(0) == doctest::Approx(p.xstar(0)));
}

TEST_CASE("refinement machinery on a grid-sampled representation") {
    auto h = Bifunction::separable(half_sq());
    auto hg = Bifunction::grid_sample(h, 2.0, 41);
    // the regularized value reaches the grid tolerance class
    auto sol = regularized_min(hg, 1e-2);
    CHECK(sol.value < 1e-2);
    CHECK(sol.value >= -1e-6);
    CHECK(sol.point.x.norm() < 0.1);
    // one refinement step with a modest budget
    auto z = make_point({0.0}, {1.0});
    auto r = br_step(hg, z, 0.05);
    ExtReal hv = hg.eval(r);
    REQUIRE(hv.is_finite());
    CHECK(hv.value() - duality_product(r) < 0.05);
    double gz = hg.eval(z).value() - duality_product(z);
    CHECK((r.x - z.x).squaredNorm() <= gz + 1e-6);
    CHECK((r.xstar - z.xstar).squaredNorm() <= gz + 1e-6);
}

TEST_CASE("refinement with a budget barely above the gap") {
    auto h = Bifunction::separable(half_sq());
    auto p = make_point({0.0}, {1.0});
    // gap 0.5, eps within 1e-6 of it: theta is tiny and the first budget is
    // far below the arithmetic floor; the exact path still finishes
    auto tr = br_refine(h, p, 0.5 + 1e-6);
    CHECK(tr.completed);
    CHECK(std::abs(tr.limit.x(0) - tr.limit.xstar(0)) < 1e-6);
    CHECK(std::abs(tr.limit.x(0)) < std::sqrt(0.5 + 1e-6));
}

TEST_CASE("refinement rejects an infinite start value") {
    auto sig = Bifunction::sigma(MonotoneOperator::identity(1));
    CHECK_THROWS_AS(br_refine(sig, make_point({0.0}, {1.0}), 1.0), PreconditionError);
}
