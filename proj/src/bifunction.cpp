#include "fitzbr/bifunction.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fitzbr/errors.hpp"
#include "fitzbr/simplex.hpp"

namespace fitzbr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// phi for an affine operator x -> Ax + b as a quadratic normal form over the
// stacked u = (x, x*):
//   phi(u) = 1/4 c'Q^+ c + <x, b>  on {N c = 0},  c = A'x + x* - b,
// where Q is the symmetric part of A and N spans its null space.
QuadraticOnAffine fitz_affine_qoa(const Mat& A, const Vec& b) {
    const int n = static_cast<int>(b.size());
    Mat Q = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    double etol = 1e-11 * scale;
    Mat Qpinv = Mat::Zero(n, n);
    int nnull = 0;
    for (int i = 0; i < n; ++i) {
        if (es.eigenvalues()(i) > etol)
            Qpinv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() /
                     es.eigenvalues()(i);
        else
            ++nnull;
    }
    Mat C(n, 2 * n);  // c = C u - b
    C.leftCols(n) = A.transpose();
    C.rightCols(n) = Mat::Identity(n, n);
    Mat P = 0.5 * C.transpose() * Qpinv * C;
    Vec q = -0.5 * C.transpose() * (Qpinv * b);
    q.head(n) += b;
    double r = 0.25 * b.dot(Qpinv * b);
    Mat E(nnull, 2 * n);
    Vec d(nnull);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (es.eigenvalues()(i) <= etol) {
            E.row(row) = es.eigenvectors().col(i).transpose() * C;
            d(row) = es.eigenvectors().col(i).dot(b);
            ++row;
        }
    }
    return QuadraticOnAffine::constrained(std::move(P), std::move(q), r, std::move(E), std::move(d));
}

// sigma for an affine operator: pi + indicator of the graph, which is
// already closed and convex along the affine graph:
//   sigma(u) = x'Qx + b'x  on {x* = Ax + b}.
QuadraticOnAffine sigma_affine_qoa(const Mat& A, const Vec& b) {
    const int n = static_cast<int>(b.size());
    Mat Q = 0.5 * (A + A.transpose());
    Mat P = Mat::Zero(2 * n, 2 * n);
    P.topLeftCorner(n, n) = 2.0 * Q;
    Vec q = Vec::Zero(2 * n);
    q.head(n) = b;
    Mat E(n, 2 * n);
    E.leftCols(n) = -A;
    E.rightCols(n) = Mat::Identity(n, n);
    return QuadraticOnAffine::constrained(std::move(P), std::move(q), 0.0, std::move(E), Vec(b));
}

// 1-D pair block (x_i, x*_i) of phi or sigma for a catalogue 1-D potential.
ConvexFunction rep_block_1d(const ConvexFunction& piece, bool want_sigma) {
    switch (piece.kind()) {
        case FnKind::Quadratic: {
            auto qp = piece.quad_parts();
            Mat A = qp.A;
            Vec b = qp.b;
            return ConvexFunction::from_qoa(want_sigma ? sigma_affine_qoa(A, b)
                                                       : fitz_affine_qoa(A, b));
        }
        case FnKind::AbsNorm: {
            // For weighted |.| both extreme representations coincide with
            // f + f*: w|x| + indicator of [-w, w] at x*.
            double w = piece.abs_weights()(0);
            return ConvexFunction::permuted_blocks(
                {ConvexFunction::abs_norm(1, w),
                 ConvexFunction::box_indicator(Vec::Constant(1, -w), Vec::Constant(1, w))},
                {{0}, {1}});
        }
        case FnKind::BoxIndicator: {
            auto [lo, hi] = piece.box_bounds();
            return ConvexFunction::permuted_blocks(
                {ConvexFunction::box_indicator(lo, hi), ConvexFunction::box_support(lo, hi)},
                {{0}, {1}});
        }
        case FnKind::AffineModified: {
            // graph translation: T'(x) = T(x - s) + lin shifts the block by
            // (s, lin) and adds the pairing corrections
            auto parts = piece.affmod_parts();
            ConvexFunction base_block = rep_block_1d(parts.base, want_sigma);
            Vec shift(2), lin2(2);
            shift << parts.shift(0), parts.lin(0);
            lin2 << parts.lin(0), parts.shift(0);
            return ConvexFunction::affine_modified(base_block, shift, lin2,
                                                   -parts.shift(0) * parts.lin(0));
        }
        default:
            throw std::logic_error("representation block: unsupported 1-D potential kind");
    }
}

// Representation of a subdifferential operator as a stacked convex function.
ConvexFunction rep_subdiff(const ConvexFunction& f, bool want_sigma) {
    const int n = f.dim();
    // smooth potentials: the subdifferential is the affine map Px + q
    if (auto q = f.as_qoa(); q && q->E.rows() == 0)
        return ConvexFunction::from_qoa(want_sigma ? sigma_affine_qoa(q->P, q->q)
                                                   : fitz_affine_qoa(q->P, q->q));
    std::vector<ConvexFunction> blocks;
    std::vector<std::vector<int>> maps;
    for (int i = 0; i < n; ++i) {
        blocks.push_back(rep_block_1d(potential_piece(f, i), want_sigma));
        maps.push_back({i, n + i});
    }
    return ConvexFunction::permuted_blocks(std::move(blocks), std::move(maps));
}

Mat stacked_graph_matrix(const std::vector<PrimalDualPoint>& g, bool transpose_pairs) {
    const auto n = g.front().dim();
    Mat M(2 * n, static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& p = g[i];
        if (transpose_pairs) {
            M.col(static_cast<Eigen::Index>(i)).head(n) = p.xstar;
            M.col(static_cast<Eigen::Index>(i)).tail(n) = p.x;
        } else {
            M.col(static_cast<Eigen::Index>(i)).head(n) = p.x;
            M.col(static_cast<Eigen::Index>(i)).tail(n) = p.xstar;
        }
    }
    return M;
}

}  // namespace

Bifunction Bifunction::separable(ConvexFunction f) {
    return separable_pair(f, f.conjugate());
}

Bifunction Bifunction::separable_pair(ConvexFunction front, ConvexFunction back) {
    if (front.dim() != back.dim())
        throw std::invalid_argument("separable_pair: dimension mismatch");
    const int n = front.dim();
    std::vector<std::vector<int>> maps(2);
    for (int i = 0; i < n; ++i) maps[0].push_back(i);
    for (int i = 0; i < n; ++i) maps[1].push_back(n + i);
    ConvexFunction core =
        ConvexFunction::permuted_blocks({std::move(front), std::move(back)}, std::move(maps));
    return Bifunction(std::move(core), n, BifKind::Separable, false);
}

Bifunction Bifunction::quadratic_form(Mat P, Vec q, double r) {
    if (q.size() % 2 != 0) throw std::invalid_argument("quadratic_form: odd stacked dimension");
    const int n = static_cast<int>(q.size()) / 2;
    auto qoa = QuadraticOnAffine::unconstrained(std::move(P), std::move(q), r);
    // deliberately keep the QOA wrapper (no PSD requirement here)
    ConvexFunction core = ConvexFunction::from_qoa(std::move(qoa));
    return Bifunction(std::move(core), n, BifKind::QuadraticForm, false);
}

Bifunction Bifunction::fitzpatrick(const MonotoneOperator& T) {
    const int n = T.dim();
    switch (T.kind()) {
        case OperatorKind::Affine:
        case OperatorKind::Rotation2d:
            return Bifunction(ConvexFunction::from_qoa(fitz_affine_qoa(T.affine_A(), T.affine_b())),
                              n, BifKind::Fitzpatrick, false);
        case OperatorKind::Subdifferential:
            return Bifunction(rep_subdiff(T.potential(), false), n, BifKind::Fitzpatrick, false);
        case OperatorKind::SampledGraph: {
            // sup over the stored points only: a lower bound for the true phi
            const auto& g = T.graph_points();
            Mat G = stacked_graph_matrix(g, true);
            Vec e(static_cast<Eigen::Index>(g.size()));
            for (std::size_t i = 0; i < g.size(); ++i)
                e(static_cast<Eigen::Index>(i)) = -duality_product(g[i]);
            return Bifunction(ConvexFunction::max_affine(std::move(G), std::move(e)), n,
                              BifKind::Fitzpatrick, true);
        }
    }
    throw std::logic_error("unreachable");
}

Bifunction Bifunction::sigma(const MonotoneOperator& T) {
    const int n = T.dim();
    switch (T.kind()) {
        case OperatorKind::Affine:
        case OperatorKind::Rotation2d:
            return Bifunction(ConvexFunction::from_qoa(sigma_affine_qoa(T.affine_A(), T.affine_b())),
                              n, BifKind::Sigma, false);
        case OperatorKind::Subdifferential:
            return Bifunction(rep_subdiff(T.potential(), true), n, BifKind::Sigma, false);
        case OperatorKind::SampledGraph: {
            // clconv(pi + indicator of the finite graph): the lower hull of
            // the sampled epigraph (exact for the finite graph)
            const auto& g = T.graph_points();
            Mat Q = stacked_graph_matrix(g, false);
            Vec v(static_cast<Eigen::Index>(g.size()));
            for (std::size_t i = 0; i < g.size(); ++i)
                v(static_cast<Eigen::Index>(i)) = duality_product(g[i]);
            return Bifunction(ConvexFunction::hull_of_points(std::move(Q), std::move(v)), n,
                              BifKind::Sigma, false);
        }
    }
    throw std::logic_error("unreachable");
}

Bifunction Bifunction::grid_sample(const Bifunction& h, double R, int m) {
    ConvexFunction sampled = ConvexFunction::grid_sample(h.core(), R, m);
    if (!h.core().provably_convex()) {
        // resample without the hull-consistency shortcut
        auto gd = sampled.grid_data();
        sampled = ConvexFunction::grid_raw(*gd->axes, *gd->values, false);
    }
    return Bifunction(std::move(sampled), h.n(), BifKind::Grid, h.lower_bound_only());
}

Bifunction Bifunction::grid_raw(int n, std::vector<GridAxis> axes, std::vector<double> values,
                                bool hull_consistent) {
    if (static_cast<int>(axes.size()) != 2 * n)
        throw std::invalid_argument("grid_raw: need 2n axes");
    return Bifunction(ConvexFunction::grid_raw(std::move(axes), std::move(values), hull_consistent),
                      n, BifKind::Grid, false);
}

Bifunction Bifunction::conjugate() const {
    return Bifunction(core_.conjugate(), n_, BifKind::Derived, false);
}

Bifunction Bifunction::translate(const Vec& z, const Vec& zstar) const {
    if (z.size() != n_ || zstar.size() != n_)
        throw std::invalid_argument("translate: dimension mismatch");
    if (z.isZero(0.0) && zstar.isZero(0.0)) return *this;
    Vec t(2 * n_), lin(2 * n_);
    t << z, zstar;
    lin << -zstar, -z;
    ConvexFunction core = ConvexFunction::affine_modified(core_, -t, lin, -z.dot(zstar));
    return Bifunction(std::move(core), n_, BifKind::Derived, lower_bound_);
}

Bifunction Bifunction::rescaled(double a, double b) const {
    Vec s(2 * n_);
    s.head(n_).setConstant(a);
    s.tail(n_).setConstant(b);
    return Bifunction(core_.rescaled(s), n_, BifKind::Derived, lower_bound_);
}

Bifunction Bifunction::with_core(ConvexFunction core) const {
    Bifunction h(*this);
    h.core_ = std::move(core);
    return h;
}

ExtReal fitzpatrick_eval(const MonotoneOperator& T, const PrimalDualPoint& p) {
    return Bifunction::fitzpatrick(T).eval(p);
}

ExtReal sigma_eval(const MonotoneOperator& T, const PrimalDualPoint& p) {
    return Bifunction::sigma(T).eval(p);
}

EnlargementReport eps_enlargement_test(const MonotoneOperator& T, const PrimalDualPoint& p,
                                       double eps) {
    if (eps < 0) throw PreconditionError("eps_enlargement_test: eps must be >= 0");
    // inf over the graph of <x-y, x*-y*> equals pi(p) - phi_T(p) by the
    // definition of the Fitzpatrick supremum.
    ExtReal phi = fitzpatrick_eval(T, p);
    EnlargementReport rep;
    if (phi.is_pos_inf()) {
        rep.inf_value = ExtReal::neg_inf();
        rep.member = false;
        return rep;
    }
    rep.inf_value = ExtReal(duality_product(p)) - phi;
    double slack = T.kind() == OperatorKind::SampledGraph ? tol::mono_sampled : tol::mono_analytic;
    rep.member = rep.inf_value >= ExtReal(-eps - slack);
    return rep;
}

namespace {

template <typename F>
void sweep_stacked(int dim2n, const TestGrid& grid, F&& fn) {
    GridAxis ax{-grid.R, grid.R, grid.m};
    std::vector<int> idx(static_cast<std::size_t>(dim2n), 0);
    Vec u(dim2n);
    std::size_t total = 1;
    for (int a = 0; a < dim2n; ++a) total *= static_cast<std::size_t>(grid.m);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < dim2n; ++a) u(a) = ax.coord(idx[static_cast<std::size_t>(a)]);
        fn(u);
        for (int a = dim2n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < grid.m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
}

double stacked_pairing(const Vec& u) {
    const auto n = u.size() / 2;
    return u.head(n).dot(u.tail(n));
}

// Minimum of (value - pairing) over sweep points; +inf when nothing finite.
struct GapScan {
    double min_gap = kInf;
    Vec witness;

    void consider(const Vec& u, ExtReal v) {
        if (!v.is_finite()) return;
        double gap = v.value() - stacked_pairing(u);
        if (gap < min_gap) {
            min_gap = gap;
            witness = u;
        }
    }
};

}  // namespace

FamilyReport family_membership(const Bifunction& h, const MonotoneOperator& T,
                               const TestGrid& grid, std::uint64_t seed) {
    FamilyReport rep;
    const double tol = tol::rep(combine(h.tol_class(),
                                        T.kind() == OperatorKind::SampledGraph ? TolClass::Grid
                                                                               : TolClass::Strict));
    const int d = 2 * h.n();
    rep.majorization_global = !h.lower_bound_only();

    // (a) majorization over the test grid (graph points only for lower bounds)
    if (rep.majorization_global) {
        sweep_stacked(d, grid, [&](const Vec& u) {
            if (!rep.ok) return;
            ++rep.points_checked;
            ExtReal v = h.eval_stacked(u);
            if (v.is_finite() && v.value() < stacked_pairing(u) - tol) {
                rep.ok = false;
                rep.failure = "majorization";
                rep.witness = PrimalDualPoint::from_stacked(u);
            }
        });
        if (!rep.ok) return rep;
    }

    // (b) equality on the sampled graph
    auto graph = T.sample_graph(grid.R, grid.m);
    for (const auto& g : graph) {
        ++rep.graph_points_checked;
        ExtReal v = h.eval(g);
        double pi = duality_product(g);
        if (!v.is_finite() || std::abs(v.value() - pi) > tol) {
            rep.ok = false;
            rep.failure = "graph equality";
            rep.witness = g;
            return rep;
        }
    }

    // (c) convexity: hull-backed kinds are convex by construction; the rest
    // get seeded random midpoint tests.
    if (h.kind() != BifKind::Grid) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(-grid.R, grid.R);
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            Vec p(d), q(d);
            for (int i = 0; i < d; ++i) {
                p(i) = unif(rng);
                q(i) = unif(rng);
            }
            ++rep.convexity_trials;
            ExtReal vp = h.eval_stacked(p), vq = h.eval_stacked(q);
            if (!vp.is_finite() || !vq.is_finite()) continue;
            ExtReal vm = h.eval_stacked(0.5 * (p + q));
            double bound = 0.5 * (vp.value() + vq.value());
            if (!vm.is_finite() || vm.value() > bound + tol) {
                rep.ok = false;
                rep.failure = "midpoint convexity";
                rep.witness = PrimalDualPoint::from_stacked(0.5 * (p + q));
                return rep;
            }
        }
    }
    return rep;
}

ConditionReport check_dual_condition(const Bifunction& h, const TestGrid& grid) {
    ConditionReport rep;
    rep.tol_class = h.tol_class();
    const int d = 2 * h.n();

    GapScan primal;
    if (auto gd = h.core().grid_data()) {
        // grid kind: its own nodes, stored values
        const auto& axes = *gd->axes;
        const auto& values = *gd->values;
        std::vector<int> idx(axes.size(), 0);
        Vec u(d);
        for (std::size_t flat = 0; flat < values.size(); ++flat) {
            for (int a = 0; a < d; ++a) u(a) = axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]);
            if (std::isfinite(values[flat])) primal.consider(u, ExtReal(values[flat]));
            for (int a = d - 1; a >= 0; --a) {
                if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
                idx[static_cast<std::size_t>(a)] = 0;
            }
        }
    } else {
        sweep_stacked(d, grid, [&](const Vec& u) { primal.consider(u, h.eval_stacked(u)); });
    }

    GapScan dual;
    if (h.core().grid_data()) {
        // materialize the per-axis transform onto the same slope box and sweep
        // its nodes, masked to the slopes where it is exact
        std::vector<GridAxis> out = *h.core().grid_data()->axes;
        ConvexFunction hs = *h.core().conjugate_grid(out);
        rep.boundary_warning = hs.boundary_warning();
        auto gd = hs.grid_data();
        const auto& axes = *gd->axes;
        const auto& values = *gd->values;
        const auto* valid = gd->valid;
        std::vector<int> idx(axes.size(), 0);
        Vec u(d);
        for (std::size_t flat = 0; flat < values.size(); ++flat) {
            for (int a = 0; a < d; ++a) u(a) = axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]);
            if ((valid == nullptr || (*valid)[flat]) && std::isfinite(values[flat]))
                dual.consider(u, ExtReal(values[flat]));
            for (int a = d - 1; a >= 0; --a) {
                if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
                idx[static_cast<std::size_t>(a)] = 0;
            }
        }
    } else {
        Bifunction hs = h.conjugate();
        rep.boundary_warning = hs.core().boundary_warning();
        sweep_stacked(d, grid, [&](const Vec& u) {
            if (!hs.core().valid_at(u)) return;
            dual.consider(u, hs.eval_stacked(u));
        });
    }

    rep.primal_min_gap = primal.min_gap;
    rep.dual_min_gap = dual.min_gap;
    if (primal.witness.size() > 0) rep.primal_witness = PrimalDualPoint::from_stacked(primal.witness);
    if (dual.witness.size() > 0) rep.dual_witness = PrimalDualPoint::from_stacked(dual.witness);
    double tol = tol::rep(rep.tol_class);
    rep.verdict = rep.primal_min_gap >= -tol && rep.dual_min_gap >= -tol;
    return rep;
}

TranslationCheck translation_conjugate_check(const Bifunction& h, const Vec& z, const Vec& zstar,
                                             const std::vector<PrimalDualPoint>& samples,
                                             const TestGrid& grid) {
    TranslationCheck out;
    Bifunction translated = h.translate(z, zstar);

    // rhs: (h*)_(z*, z)
    Bifunction rhs = h.conjugate().translate(zstar, z);

    // lhs: conjugate of the translated function, by a route that does not
    // reuse h.conjugate()
    std::optional<Bifunction> lhs;
    if (auto q = translated.as_qoa()) {
        lhs = translated.with_core(ConvexFunction::from_qoa(q->conjugate()));
        out.independent_route = true;
    } else {
        Bifunction sampled = Bifunction::grid_sample(translated, grid.R, grid.m);
        lhs = sampled.conjugate();
        out.independent_route = true;
    }

    double dev = 0.0;
    for (const auto& p : samples) {
        if (!lhs->core().valid_at(p.stacked())) continue;
        ExtReal a = lhs->eval(p);
        ExtReal b = rhs.eval(p);
        if (a.is_finite() != b.is_finite()) {
            dev = kInf;
            break;
        }
        if (a.is_finite()) dev = std::max(dev, std::abs(a.value() - b.value()));
    }
    out.deviation = dev;
    return out;
}

bool graph_conjugate_equality(const Bifunction& h, const PrimalDualPoint& p) {
    double tol = tol::rep(h.tol_class());
    ExtReal hv = h.eval(p);
    double pi = duality_product(p);
    if (!hv.is_finite() || std::abs(hv.value() - pi) > tol)
        throw PreconditionError("graph_conjugate_equality: h(p) != <x, x*> at the query point");
    Vec w(2 * h.n());
    w << p.xstar, p.x;
    ExtReal cv = h.conjugate().eval_stacked(w);
    return cv.is_finite() && std::abs(cv.value() - pi) <= tol;
}

Bifunction convex_closure(const Bifunction& h) {
    auto gd = h.core().grid_data();
    if (!gd) throw PreconditionError("convex_closure: grid bifunctions only");
    const auto& axes = *gd->axes;
    const auto& values = *gd->values;
    if (values.size() > 20000)
        throw SolverFailure("convex_closure: grid too large for node-wise hull evaluation");

    // finite samples
    std::size_t nf = 0;
    for (double v : values)
        if (std::isfinite(v)) ++nf;
    Mat pts(static_cast<Eigen::Index>(axes.size()), static_cast<Eigen::Index>(nf));
    Vec vals(static_cast<Eigen::Index>(nf));
    const int d = static_cast<int>(axes.size());
    {
        std::vector<int> idx(axes.size(), 0);
        std::size_t c = 0;
        for (std::size_t flat = 0; flat < values.size(); ++flat) {
            if (std::isfinite(values[flat])) {
                for (int a = 0; a < d; ++a)
                    pts(a, static_cast<Eigen::Index>(c)) = axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]);
                vals(static_cast<Eigen::Index>(c)) = values[flat];
                ++c;
            }
            for (int a = d - 1; a >= 0; --a) {
                if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
                idx[static_cast<std::size_t>(a)] = 0;
            }
        }
    }
    std::vector<double> hull(values.size());
    {
        std::vector<int> idx(axes.size(), 0);
        Vec u(d);
        for (std::size_t flat = 0; flat < values.size(); ++flat) {
            for (int a = 0; a < d; ++a) u(a) = axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]);
            hull[flat] = lower_hull_value(pts, vals, u).raw();
            for (int a = d - 1; a >= 0; --a) {
                if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
                idx[static_cast<std::size_t>(a)] = 0;
            }
        }
    }
    return Bifunction::grid_raw(h.n(), axes, std::move(hull), true);
}

}  // namespace fitzbr
