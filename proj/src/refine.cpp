#include "fitzbr/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fitzbr/errors.hpp"

namespace fitzbr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ShiftedRegMin {
    Vec u;          // minimizer in translated coordinates
    double value;   // h_z(u) + 0.5|u|^2
    bool exact;
    bool strict_bounds;  // tau-rescaled, norms strictly below sqrt(h_z(0))
};

// Regularized minimization of the translated function h_z, z folded in via
// shift/lin arguments of the core prox. Follows the trivial branch when
// h_z(0) < eps, otherwise the eta-threshold and tau-rescaling.
ShiftedRegMin reg_min_shifted(const Bifunction& h, const Vec& z, const Vec& zstar, double eps) {
    if (!(eps > 0)) throw PreconditionError("regularized_min: eps must be positive");
    const int n = h.n();
    Vec shift(2 * n), lin(2 * n);
    shift << z, zstar;
    lin << -zstar, -z;
    const double zpair = z.dot(zstar);

    ExtReal h00e = h.eval_stacked(shift) - ExtReal(zpair);  // h_z(0,0) = h(z) - <z, z*>
    if (h00e.is_finite() && h00e.value() < eps) {
        ShiftedRegMin out;
        out.u = Vec::Zero(2 * n);
        out.value = h00e.value();
        out.exact = true;
        out.strict_bounds = false;
        return out;
    }

    ProxResult r = h.min_shifted_reg(shift, lin);
    double v = r.value - zpair;  // value of h_z(u) + 0.5|u|^2
    const double tolv = tol::ref(h.tol_class());

    if (h00e.is_pos_inf()) {
        if (v < eps) return {r.x, v, r.exact, false};
        throw SolverFailure("regularized_min: unbounded branch failed to reach the target (best " +
                            std::to_string(v) + ")");
    }

    const double h00 = h00e.value();
    if (v <= tolv) {
        // the inner solve reached its noise floor: the minimizer itself
        // satisfies the norm bounds through the subgradient inequality at
        // the optimum, and its gap is at the floor as well
        return {r.x, v, r.exact, false};
    }
    const double eta = eps * eps / (4.0 * h00);
    if (v < eta) {
        double tau = std::sqrt(h00) / (std::sqrt(h00) + std::sqrt(2.0 * eta));
        Vec ut = tau * r.x;
        ExtReal hv = h.eval_stacked(ut + shift);
        if (hv.is_finite()) {
            double lint = lin.dot(ut);
            double vt = hv.value() + lint - zpair + 0.5 * ut.squaredNorm();
            double nx = ut.head(n).squaredNorm(), ns = ut.tail(n).squaredNorm();
            if (vt < eps && nx < h00 && ns < h00) return {ut, vt, r.exact, true};
        }
        // fall through to the un-rescaled minimizer when the rescale did not
        // verify numerically
    }
    if (v < eps) {
        double nx = r.x.head(n).squaredNorm(), ns = r.x.tail(n).squaredNorm();
        if (nx <= h00 + tolv && ns <= h00 + tolv) return {r.x, v, r.exact, false};
        throw SolverFailure(
            "regularized_min: norm bounds violated; the dual condition likely fails");
    }
    throw SolverFailure("regularized_min: could not reach value < eps (best " + std::to_string(v) +
                        "); violated precondition or undersized grid");
}

double gap_at(const Bifunction& h, const PrimalDualPoint& p) {
    ExtReal v = h.eval(p);
    if (!v.is_finite()) return kInf;
    return v.value() - duality_product(p);
}

}  // namespace

RegularizedSolution regularized_min(const Bifunction& h, double eps) {
    const int n = h.n();
    auto inner = reg_min_shifted(h, Vec::Zero(n), Vec::Zero(n), eps);

    RegularizedSolution sol;
    sol.point = PrimalDualPoint::from_stacked(inner.u);
    sol.value = inner.value;
    sol.exact = inner.exact;
    ExtReal h00 = h.eval_stacked(Vec::Zero(2 * n));
    sol.norm_bound = h00.raw();
    sol.norm_bound_claimed = h00.is_finite();

    Bifunction hs = h.conjugate();
    ProxResult rc = hs.min_shifted_reg(Vec::Zero(2 * n), Vec::Zero(2 * n));
    sol.dual_certificate = PrimalDualPoint::from_stacked(rc.x);
    sol.certificate_value = rc.value;
    sol.exact = sol.exact && rc.exact;
    return sol;
}

PrimalDualPoint br_step(const Bifunction& h, const PrimalDualPoint& z, double eps) {
    if (!(eps > 0)) throw PreconditionError("br_step: eps must be positive");
    double gz = gap_at(h, z);
    if (gz == kInf) throw PreconditionError("br_step: h(z) must be finite");
    if (gz < eps) return z;  // the translated trivial branch lands back on z
    auto inner = reg_min_shifted(h, z.x, z.xstar, eps);
    return PrimalDualPoint(inner.u.head(h.n()) + z.x, inner.u.tail(h.n()) + z.xstar);
}

RefinementTrace br_refine(const Bifunction& h, const PrimalDualPoint& p, double eps,
                          double tol_gap) {
    if (!(eps > 0)) throw PreconditionError("br_refine: eps must be positive");
    RefinementTrace tr;
    const double tolv = tol::ref(h.tol_class());
    double gap0 = gap_at(h, p);
    if (gap0 == kInf) throw PreconditionError("br_refine: h(p) is not finite");
    if (gap0 >= eps)
        throw PreconditionError("br_refine: gap " + std::to_string(gap0) +
                                " is not strictly below eps " + std::to_string(eps));
    tr.eps0 = gap0;
    tr.iterates.push_back(p);
    tr.gaps.push_back(gap0);
    if (gap0 <= tol_gap) {  // degenerate start: already at the graph
        tr.theta = 0.25;
        tr.limit = p;
        tr.completed = true;
        return tr;
    }

    double r = std::sqrt(gap0 / eps);
    double sqrt_theta = 0.5 * (1.0 - r);
    tr.theta = sqrt_theta * sqrt_theta;

    PrimalDualPoint x = p;
    double budget = gap0;
    const int max_iter = 500;
    for (int k = 0; k < max_iter; ++k) {
        budget *= tr.theta;
        if (budget <= 0) budget = std::numeric_limits<double>::denorm_min();
        PrimalDualPoint xn = br_step(h, x, budget);
        double g = gap_at(h, xn);
        double snx = (xn.x - x.x).norm();
        double sns = (xn.xstar - x.xstar).norm();
        tr.iterates.push_back(xn);
        tr.gaps.push_back(g);
        tr.step_norm_x.push_back(snx);
        tr.step_norm_xstar.push_back(sns);
        double prev_gap = tr.gaps[tr.gaps.size() - 2];
        tr.step_bounds_ok.push_back(snx * snx <= prev_gap + tolv && sns * sns <= prev_gap + tolv);
        x = xn;
        if (g <= tol_gap) {
            tr.limit = x;
            tr.completed = true;
            return tr;
        }
    }
    tr.limit = x;
    tr.completed = false;
    std::ostringstream os;
    os << "br_refine: budget exhausted at gap " << tr.gaps.back();
    tr.diagnostic = os.str();
    return tr;
}

RefinementTrace br_refine_scaled(const Bifunction& h, const PrimalDualPoint& p, double eps,
                                 double lambda, double tol_gap) {
    if (!(lambda > 0)) throw PreconditionError("br_refine_scaled: lambda must be positive");
    NormWeight w(std::sqrt(eps) / lambda);
    Bifunction hs = h.rescaled(1.0 / w.s, w.s);
    RefinementTrace tr = br_refine(hs, w.apply(p), eps, tol_gap);
    tr.scale = w.s;
    for (auto& it : tr.iterates) it = w.unapply(it);
    tr.limit = w.unapply(tr.limit);
    return tr;
}

StrictBrResult strict_br(const MonotoneOperator& T, const PrimalDualPoint& p, double eps,
                         double eta, double lambda) {
    if (!(eta > eps))
        throw PreconditionError("strict_br: eta must be strictly greater than eps");
    if (!(lambda > 0)) throw PreconditionError("strict_br: lambda must be positive");
    StrictBrResult out;
    out.enlargement = eps_enlargement_test(T, p, eps);
    if (!out.enlargement.member)
        throw PreconditionError("strict_br: p is not in the eps-enlargement (inf = " +
                                out.enlargement.inf_value.str() + ")");
    Bifunction h = Bifunction::fitzpatrick(T);
    out.trace = br_refine_scaled(h, p, eta, lambda);
    if (!out.trace.completed)
        throw SolverFailure("strict_br: refinement did not converge: " + out.trace.diagnostic);
    PrimalDualPoint snapped = T.project_to_graph(out.trace.limit);
    out.snap_distance = std::sqrt((snapped.x - out.trace.limit.x).squaredNorm() +
                                  (snapped.xstar - out.trace.limit.xstar).squaredNorm());
    out.point = snapped;
    return out;
}

ProbeResult maximality_probe(const Bifunction& h, const PrimalDualPoint& z,
                             const std::vector<PrimalDualPoint>& graph_sample, int budget,
                             double tol_probe) {
    ProbeResult out;
    double tol_mono = tol::mono(h.tol_class());
    double worst = kInf;
    const PrimalDualPoint* wit = nullptr;
    for (const auto& g : graph_sample) {
        double prod = (g.x - z.x).dot(g.xstar - z.xstar);
        if (prod < worst) {
            worst = prod;
            wit = &g;
        }
    }
    if (!graph_sample.empty()) out.precondition_inf = worst;
    if (wit != nullptr && worst < -tol_mono) {
        out.rejected = true;
        out.precondition_witness = *wit;
        return out;
    }

    Bifunction hz = h.translate(z.x, z.xstar);
    for (int k = 1; k <= budget; ++k) {
        ++out.steps;
        double epsk = 1.0 / (static_cast<double>(k) * k);
        auto inner = reg_min_shifted(h, z.x, z.xstar, epsk);
        PrimalDualPoint uk = PrimalDualPoint::from_stacked(inner.u);
        // gap of the translated function at u_k is below its regularized
        // value, so the refinement hypothesis holds with eps = epsk
        RefinementTrace tr = br_refine(hz, uk, std::max(epsk, inner.value + tol::gap), tol::gap);
        PrimalDualPoint xbar(tr.limit.x + z.x, tr.limit.xstar + z.xstar);
        out.sequence.push_back(xbar);
        double dist = std::sqrt((xbar.x - z.x).squaredNorm() + (xbar.xstar - z.xstar).squaredNorm());
        out.distances.push_back(dist);
        if (dist <= tol_probe) {
            out.verdict = true;
            return out;
        }
    }
    return out;
}

std::vector<PrimalDualPoint> equality_graph_sample(const Bifunction& h, const TestGrid& grid) {
    std::vector<PrimalDualPoint> out;
    const int d = 2 * h.n();
    const double tol = tol::rep(h.tol_class());
    GridAxis ax{-grid.R, grid.R, grid.m};
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Vec u(d);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(grid.m);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < d; ++a) u(a) = ax.coord(idx[static_cast<std::size_t>(a)]);
        ExtReal v = h.eval_stacked(u);
        if (v.is_finite()) {
            double pi = u.head(d / 2).dot(u.tail(d / 2));
            if (std::abs(v.value() - pi) <= tol) out.push_back(PrimalDualPoint::from_stacked(u));
        }
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < grid.m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return out;
}

}  // namespace fitzbr
