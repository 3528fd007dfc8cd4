// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances and runtime budget in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "fitzbr/refine.hpp"
#include "fitzbr/scenario.hpp"

using namespace fitzbr;

namespace {

ConvexFunction half_sq() {
    return ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
}
ConvexFunction half_sq_plus_x() {
    return ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Ones(1), 0.0);
}

struct Checker {
    bool ok = true;
    std::ostringstream why;
    int checks = 0;

    void expect(bool cond, const std::string& what) {
        ++checks;
        if (!cond && ok) {
            ok = false;
            why << what;
        }
    }
};

struct Outcome {
    bool pass;
    double ms;
    std::string detail;
};

Outcome timed(double budget_ms, const std::function<void(Checker&)>& body) {
    Checker c;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (ms >= budget_ms) c.expect(false, "runtime budget exceeded");
    std::ostringstream d;
    d << c.checks << " checks, " << ms / 1000.0 << " s";
    if (!c.ok) d << " -- " << c.why.str();
    return {c.ok, ms, d.str()};
}

double inf_norm_diff(const Vec& a, const Vec& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

// ---------------------------------------------------------------- criteria

// Fitzpatrick extremality phi <= f + f* <= sigma on a 41x41 grid, equality
// with the pairing on graph points, for three catalogue operators.
Outcome criterion1() {
    return timed(1000.0, [](Checker& c) {
        struct Case {
            MonotoneOperator T;
            ConvexFunction f;
        };
        std::vector<Case> cases;
        cases.push_back({MonotoneOperator::identity(1), half_sq()});
        cases.push_back({MonotoneOperator::affine(Mat::Identity(1, 1), Vec::Ones(1)),
                         half_sq_plus_x()});
        cases.push_back({MonotoneOperator::subdifferential(ConvexFunction::abs_norm(1)),
                         ConvexFunction::abs_norm(1)});
        for (auto& cs : cases) {
            auto phi = Bifunction::fitzpatrick(cs.T);
            auto mid = Bifunction::separable(cs.f);
            auto sig = Bifunction::sigma(cs.T);
            for (int i = 0; i < 41; ++i) {
                for (int j = 0; j < 41; ++j) {
                    auto p = make_point({-2.0 + 0.1 * i}, {-2.0 + 0.1 * j});
                    double a = phi.eval(p).raw(), b = mid.eval(p).raw(), s = sig.eval(p).raw();
                    c.expect(a <= b + 1e-9, "phi <= f + f* violated");
                    c.expect(b <= s + 1e-9, "f + f* <= sigma violated");
                }
            }
            for (const auto& g : cs.T.sample_graph(2.0, 41)) {
                ExtReal v = phi.eval(g);
                c.expect(v.is_finite() && std::abs(v.value() - duality_product(g)) <= 1e-9,
                         "phi != pairing on a graph point");
            }
        }
    });
}

// Conjugate pair for the identity: phi* transposed equals sigma and back.
Outcome criterion2() {
    return timed(1000.0, [](Checker& c) {
        auto id = MonotoneOperator::identity(1);
        auto phi = Bifunction::fitzpatrick(id);
        auto sig = Bifunction::sigma(id);
        auto phis = phi.conjugate();
        auto sigs = sig.conjugate();
        std::mt19937_64 rng(20240902);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int t = 0; t < 100; ++t) {
            PrimalDualPoint p = t % 2 == 0
                                    ? PrimalDualPoint(Vec::Constant(1, u(rng)), Vec(Vec::Constant(1, 0)))
                                    : PrimalDualPoint(Vec::Constant(1, u(rng)), Vec::Constant(1, u(rng)));
            if (t % 2 == 0) p.xstar = p.x;  // half the points sit on the diagonal
            Vec w(2);
            w << p.xstar(0), p.x(0);
            ExtReal a = phis.eval_stacked(w), b = sig.eval(p);
            c.expect(a.is_finite() == b.is_finite(), "phi*/sigma finiteness mismatch");
            if (a.is_finite()) c.expect(std::abs(a.value() - b.value()) <= 1e-9, "phi* vs sigma");
            ExtReal a2 = sigs.eval_stacked(w), b2 = phi.eval(p);
            c.expect(a2.is_finite() == b2.is_finite(), "sigma*/phi finiteness mismatch");
            if (a2.is_finite()) c.expect(std::abs(a2.value() - b2.value()) <= 1e-9, "sigma* vs phi");
        }
    });
}

// Translation identities: the gap identity to 1e-12 and the conjugate
// identity to 1e-9 on seeded samples, for the separable and quadratic kinds.
Outcome criterion3() {
    return timed(1000.0, [](Checker& c) {
        std::mt19937_64 rng(20240903);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Mat P(2, 2);
        P << 2.0, 0.5, 0.5, 1.0;
        Vec q(2);
        q << 0.1, -0.2;
        std::vector<Bifunction> hs;
        hs.push_back(Bifunction::separable(half_sq()));
        hs.push_back(Bifunction::quadratic_form(P, q, 0.3));
        for (const auto& h : hs) {
            std::vector<PrimalDualPoint> samples;
            for (int t = 0; t < 100; ++t)
                samples.emplace_back(Vec::Constant(1, u(rng)), Vec::Constant(1, u(rng)));
            for (int t = 0; t < 100; ++t) {
                Vec z = Vec::Constant(1, u(rng)), zs = Vec::Constant(1, u(rng));
                auto hz = h.translate(z, zs);
                PrimalDualPoint p(Vec::Constant(1, u(rng)), Vec::Constant(1, u(rng)));
                double lhs = hz.eval(p).value() - duality_product(p);
                PrimalDualPoint pz(p.x + z, p.xstar + zs);
                double rhs = h.eval(pz).value() - duality_product(pz);
                c.expect(std::abs(lhs - rhs) <= 1e-12, "gap identity");
            }
            for (int t = 0; t < 10; ++t) {
                Vec z = Vec::Constant(1, u(rng)), zs = Vec::Constant(1, u(rng));
                auto chk = translation_conjugate_check(h, z, zs, samples);
                c.expect(chk.independent_route, "conjugate route not independent");
                c.expect(chk.deviation <= 1e-9, "conjugate identity deviation");
            }
        }
    });
}

// Regularized minimization of the shifted quadratic: exact minimizer,
// vanishing value, norm bounds, matching certificate norms.
Outcome criterion4() {
    return timed(1000.0, [](Checker& c) {
        auto h = Bifunction::separable(half_sq_plus_x());
        auto sol = regularized_min(h, 1e-7);
        c.expect(std::abs(sol.point.x(0) + 0.5) <= 1e-6, "minimizer x");
        c.expect(std::abs(sol.point.xstar(0) - 0.5) <= 1e-6, "minimizer x*");
        c.expect(std::abs(sol.value) <= 1e-9, "optimal value");
        c.expect(std::abs(sol.norm_bound - 0.5) <= 1e-12, "h(0,0) = 1/2");
        c.expect(sol.point.x.squaredNorm() <= sol.norm_bound + 1e-9, "primal norm bound");
        c.expect(sol.point.xstar.squaredNorm() <= sol.norm_bound + 1e-9, "dual norm bound");
        c.expect(std::abs(sol.point.x.squaredNorm() - 0.25) <= 1e-6, "bound value 1/4");
        c.expect(std::abs(sol.dual_certificate.x.norm() - sol.dual_certificate.xstar.norm()) <= 1e-6,
                 "certificate norms differ");
        c.expect(sol.certificate_value <= 1e-9, "certificate value");
    });
}

// BR iteration over 200 seeded analytic instances: geometric decay, step
// law, final component bounds, graph gap at the limit.
Outcome criterion5() {
    return timed(10000.0, [](Checker& c) {
        std::mt19937_64 rng(20240905);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        std::uniform_real_distribution<double> ratio(0.1, 0.9);
        std::uniform_real_distribution<double> slope(0.3, 3.0);

        auto make_instance = [&](int which) -> Bifunction {
            switch (which % 6) {
                case 0: return Bifunction::fitzpatrick(MonotoneOperator::identity(1));
                case 1: return Bifunction::separable(half_sq());
                case 2:
                    return Bifunction::fitzpatrick(MonotoneOperator::affine(
                        (Mat(1, 1) << slope(rng)).finished(), Vec::Constant(1, u(rng))));
                case 3: return Bifunction::separable(ConvexFunction::abs_norm(1));
                case 4:
                    return Bifunction::separable(ConvexFunction::box_indicator(
                        Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)));
                default: {
                    Mat A(2, 2);
                    double a = slope(rng), b2 = slope(rng), s = 0.4 * u(rng);
                    A << a, s, -s, b2;  // monotone: symmetric part diag(a, b2)
                    return Bifunction::fitzpatrick(
                        MonotoneOperator::affine(A, (Vec(2) << u(rng), u(rng)).finished()));
                }
            }
        };

        int done = 0;
        int attempts = 0;
        while (done < 200 && attempts < 4000) {
            ++attempts;
            Bifunction h = make_instance(attempts);
            const int n = h.n();
            Vec px(n), ps(n);
            for (int i = 0; i < n; ++i) {
                px(i) = u(rng);
                ps(i) = u(rng);
            }
            PrimalDualPoint p(px, ps);
            ExtReal hv = h.eval(p);
            if (!hv.is_finite()) continue;
            double gap = hv.value() - duality_product(p);
            if (gap <= 1e-4) continue;
            double eps = gap / ratio(rng);
            RefinementTrace tr = br_refine(h, p, eps);
            c.expect(tr.completed, "trace not completed");
            if (!tr.completed) continue;
            ++done;
            for (std::size_t k = 0; k < tr.gaps.size(); ++k)
                c.expect(tr.gaps[k] < std::pow(tr.theta, static_cast<double>(k)) * tr.eps0 + 1e-8,
                         "geometric decay");
            for (bool ok : tr.step_bounds_ok) c.expect(ok, "step bound");
            c.expect(inf_norm_diff(tr.limit.x, p.x) < std::sqrt(eps), "limit primal bound");
            c.expect(inf_norm_diff(tr.limit.xstar, p.xstar) < std::sqrt(eps), "limit dual bound");
            c.expect(tr.gaps.back() <= 1e-8, "graph gap before snapping");
        }
        c.expect(done == 200, "fewer than 200 instances completed");
    });
}

// Strict BR on the identity: the hand-derived window, then 50 seeded
// parameter triples with the (lambda, eta/lambda) box bounds.
Outcome criterion6() {
    return timed(5000.0, [](Checker& c) {
        auto id = MonotoneOperator::identity(1);
        auto p = make_point({0.0}, {1.0});
        auto res = strict_br(id, p, 0.25, 0.3, 0.5);
        double t = res.point.x(0);
        c.expect(std::abs(res.point.xstar(0) - t) <= 1e-9, "output off the graph");
        c.expect(t > 0.4 && t < 0.5, "window (0.4, 0.5)");

        std::mt19937_64 rng(20240906);
        std::uniform_real_distribution<double> ueps(0.25, 0.5);
        std::uniform_real_distribution<double> uratio(1.1, 2.0);
        std::uniform_real_distribution<double> ulam(0.25, 1.5);
        for (int k = 0; k < 50; ++k) {
            double eps = ueps(rng);
            double eta = eps * uratio(rng);
            double lambda = ulam(rng);
            auto r = strict_br(id, p, eps, eta, lambda);
            c.expect((r.point.x - p.x).norm() < lambda, "|x - x_lambda| < lambda");
            c.expect((r.point.xstar - p.xstar).norm() < eta / lambda,
                     "|x* - x*_lambda| < eta/lambda");
            c.expect(id.eval_at(r.point.x).contains(r.point.xstar, 1e-8), "graph membership");
        }
    });
}

// Fenchel duality on the worked pairs and 50 seeded quadratic pairs, with
// dual attainment at the returned maximizer.
Outcome criterion7() {
    return timed(2000.0, [](Checker& c) {
        auto attained = [&](const ConvexFunction& f, const ConvexFunction& g,
                            const DualitySolveReport& rep) {
            double at = -f.conjugate().eval(-rep.dual_maximizer).value() -
                        g.conjugate().eval(rep.dual_maximizer).value();
            return std::abs(at - rep.dual_value) <= 1e-9;
        };
        {
            auto f = half_sq();
            auto rep = fenchel_duality(f, f);
            c.expect(std::abs(rep.gap) <= 1e-6, "gap f=g=x^2/2");
            c.expect(attained(f, f, rep), "attainment f=g");
        }
        {
            auto f = ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Constant(1, -1.0), 0.5);
            auto g = ConvexFunction::quadratic(Mat::Identity(1, 1), Vec::Constant(1, 1.0), 0.5);
            auto rep = fenchel_duality(f, g);
            c.expect(std::abs(rep.primal_value - 1.0) <= 1e-6, "primal (x-1)^2/2 + (x+1)^2/2");
            c.expect(std::abs(rep.gap) <= 1e-6, "gap shifted quadratics");
            c.expect(attained(f, g, rep), "attainment shifted quadratics");
        }
        {
            auto f = ConvexFunction::abs_norm(1);
            auto g = ConvexFunction::affine_modified(ConvexFunction::abs_norm(1), Vec::Ones(1),
                                                     Vec::Zero(1), 0.0);
            auto rep = fenchel_duality(f, g);
            c.expect(std::abs(rep.primal_value - 1.0) <= 1e-6, "primal |x| + |x-1|");
            c.expect(std::abs(rep.gap) <= 1e-6, "gap abs pair");
            c.expect(attained(f, g, rep), "attainment abs pair");
        }
        std::mt19937_64 rng(20240907);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int k = 0; k < 50; ++k) {
            int n = 1 + (k % 2);
            Mat Mf(n, n), Mg(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    Mf(i, j) = u(rng);
                    Mg(i, j) = u(rng);
                }
            Mat Af = Mf * Mf.transpose() + 0.2 * Mat::Identity(n, n);
            Mat Ag = Mg * Mg.transpose() + 0.2 * Mat::Identity(n, n);
            Vec bf(n), bg(n);
            for (int i = 0; i < n; ++i) {
                bf(i) = u(rng);
                bg(i) = u(rng);
            }
            auto f = ConvexFunction::quadratic(Af, bf, u(rng));
            auto g = ConvexFunction::quadratic(Ag, bg, u(rng));
            auto rep = fenchel_duality(f, g);
            c.expect(std::abs(rep.gap) <= 1e-6, "gap seeded quadratic pair");
            c.expect(attained(f, g, rep), "attainment seeded pair");
        }
    });
}

// Maximality probe: convergence to a monotonically-related target and
// rejection of an unrelated one with the witness infimum.
Outcome criterion8() {
    return timed(5000.0, [](Checker& c) {
        auto h = Bifunction::separable(half_sq());
        std::vector<PrimalDualPoint> sample;
        for (int i = 0; i <= 40; ++i) {
            double t = -2.0 + 0.1 * i;
            if (std::abs(t - 0.5) < 0.049) continue;  // subsampled away from the target
            sample.push_back(make_point({t}, {t}));
        }
        auto res = maximality_probe(h, make_point({0.5}, {0.5}), sample, 200, 1e-3);
        c.expect(!res.rejected, "related point rejected");
        c.expect(res.verdict, "no convergence verdict");
        c.expect(res.steps <= 200, "budget");
        c.expect(!res.distances.empty() && res.distances.back() <= 1e-3, "final distance");

        std::vector<PrimalDualPoint> full;
        for (int i = 0; i <= 40; ++i)
            full.push_back(make_point({-2.0 + 0.1 * i}, {-2.0 + 0.1 * i}));
        auto bad = maximality_probe(h, make_point({0.0}, {1.0}), full, 200, 1e-3);
        c.expect(bad.rejected, "unrelated point accepted");
        c.expect(std::abs(bad.precondition_inf + 0.25) <= 1e-6, "witness infimum");
    });
}

// Dual representability: separable and rotation-grid representations hold,
// the shifted pairing fails.
Outcome criterion9() {
    return timed(30000.0, [](Checker& c) {
        auto h = Bifunction::separable(half_sq());
        auto rep = check_dual_condition(h, TestGrid{2.0, 41});
        c.expect(rep.verdict, "separable verdict");
        c.expect(rep.primal_min_gap >= -1e-6, "separable primal gap");
        c.expect(rep.dual_min_gap >= -1e-6, "separable dual gap");

        auto rot = Bifunction::fitzpatrick(MonotoneOperator::rotation2d());
        auto hg = Bifunction::grid_sample(rot, 1.0, 21);  // 21^4 nodes
        auto rep2 = check_dual_condition(hg, TestGrid{1.0, 21});
        c.expect(rep2.verdict, "rotation grid verdict");
        c.expect(rep2.primal_min_gap >= -1e-6, "rotation primal gap");
        c.expect(rep2.dual_min_gap >= -1e-6, "rotation dual gap");

        Mat P(2, 2);
        P << 0, 1, 1, 0;
        auto broken = Bifunction::quadratic_form(P, Vec::Zero(2), -0.1);
        auto rep3 = check_dual_condition(broken, TestGrid{2.0, 41});
        c.expect(!rep3.verdict, "shifted pairing accepted");
        c.expect(std::abs(rep3.primal_min_gap + 0.1) <= 1e-9, "shifted pairing primal gap");
    });
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "fitzpatrick extremality", criterion1},
        {2, "phi/sigma conjugate pair", criterion2},
        {3, "translation identities", criterion3},
        {4, "regularized minimization", criterion4},
        {5, "refinement iteration", criterion5},
        {6, "strict bronsted-rockafellar", criterion6},
        {7, "fenchel duality", criterion7},
        {8, "maximality probe", criterion8},
        {9, "dual representability", criterion9},
    };
    int failures = 0;
    for (const auto& e : entries) {
        Outcome r = e.fn();
        std::printf("%s criterion %d: %s (%s)\n", r.pass ? "PASS" : "FAIL", e.id, e.name,
                    r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
