#ifndef FITZBR_BIFUNCTION_HPP
#define FITZBR_BIFUNCTION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fitzbr/convex_function.hpp"
#include "fitzbr/operators.hpp"
#include "fitzbr/point.hpp"

namespace fitzbr {

enum class BifKind { Separable, Fitzpatrick, Sigma, QuadraticForm, Grid, Derived };

// Convex bifunction h on R^n x R^n, held as a convex function over the
// stacked variable u = (x, x*). Conjugates always carry the signature
// (xstar, xdoublestar): h*(w1, w2) = sup <w1, x> + <w2, x*> - h(x, x*).
class Bifunction {
public:
    static Bifunction separable(ConvexFunction f);  // f(x) + f*(x*)
    static Bifunction separable_pair(ConvexFunction front, ConvexFunction back);
    // 0.5 u'Pu + q'u + r over the stacked u; convexity deliberately not
    // enforced here (family_membership is the check that catches it).
    static Bifunction quadratic_form(Mat P, Vec q, double r);
    static Bifunction fitzpatrick(const MonotoneOperator& T);
    static Bifunction sigma(const MonotoneOperator& T);
    static Bifunction grid_sample(const Bifunction& h, double R, int m);
    static Bifunction grid_raw(int n, std::vector<GridAxis> axes, std::vector<double> values,
                               bool hull_consistent);

    int n() const { return n_; }
    BifKind kind() const { return kind_; }
    TolClass tol_class() const { return core_.tol_class(); }
    bool lower_bound_only() const { return lower_bound_; }
    const ConvexFunction& core() const { return core_; }

    ExtReal eval(const PrimalDualPoint& p) const { return core_.eval(p.stacked()); }
    ExtReal eval_stacked(const Vec& u) const { return core_.eval(u); }

    Bifunction conjugate() const;
    Bifunction translate(const Vec& z, const Vec& zstar) const;
    // h(a x, b x*); pairing-preserving when a*b = 1
    Bifunction rescaled(double a, double b) const;

    // min over u of h(u + shift) + lin.u + 0.5|u|^2 (the regularized
    // minimization every refinement step reduces to)
    ProxResult min_shifted_reg(const Vec& shift, const Vec& lin) const {
        return core_.prox_shifted(shift, lin);
    }

    std::optional<QuadraticOnAffine> as_qoa() const { return core_.as_qoa(); }

    Bifunction with_core(ConvexFunction core) const;

private:
    Bifunction(ConvexFunction core, int n, BifKind kind, bool lower_bound)
        : core_(std::move(core)), n_(n), kind_(kind), lower_bound_(lower_bound) {}
    ConvexFunction core_;
    int n_;
    BifKind kind_;
    bool lower_bound_;
};

ExtReal fitzpatrick_eval(const MonotoneOperator& T, const PrimalDualPoint& p);
ExtReal sigma_eval(const MonotoneOperator& T, const PrimalDualPoint& p);

// Box sweep parameters for grid-based checks: nodes over [-R, R] per axis.
struct TestGrid {
    double R = 2.0;
    int m = 11;
};

struct FamilyReport {
    bool ok = true;
    bool majorization_global = true;  // false when h is only a lower bound
    std::string failure;
    std::optional<PrimalDualPoint> witness;
    int points_checked = 0;
    int graph_points_checked = 0;
    int convexity_trials = 0;
};

// h belongs to the family of convex representations of T: h >= pi on the
// test grid, h = pi on the sampled graph, and midpoint convexity on seeded
// random segments (grid kinds are convex by construction).
FamilyReport family_membership(const Bifunction& h, const MonotoneOperator& T,
                               const TestGrid& grid, std::uint64_t seed = 20240901);

struct ConditionReport {
    double primal_min_gap = 0.0;  // min over test points of h - pi (may be +inf)
    double dual_min_gap = 0.0;    // min over test points of h* - pi (may be +inf)
    PrimalDualPoint primal_witness;
    PrimalDualPoint dual_witness;
    bool verdict = false;
    TolClass tol_class = TolClass::Strict;
    bool boundary_warning = false;
};

// Verify h >= pi and h* >= pi over the grid (the dual sweep restricted to
// slopes where a sampled conjugate is exact).
ConditionReport check_dual_condition(const Bifunction& h, const TestGrid& grid);

// max over sample points of |(h_(z,z*))*(q) - (h*)_(z*,z)(q)|. The left side
// goes through the quadratic normal form when available (an independent
// conjugation route); otherwise through a grid transform of the translated
// function.
struct TranslationCheck {
    double deviation = 0.0;
    bool independent_route = true;
};
TranslationCheck translation_conjugate_check(const Bifunction& h, const Vec& z, const Vec& zstar,
                                             const std::vector<PrimalDualPoint>& samples,
                                             const TestGrid& grid = {});

// At a point with h(p) = pi(p): does h*(xstar, x) = pi(p) as well?
bool graph_conjugate_equality(const Bifunction& h, const PrimalDualPoint& p);

// Lower convex hull of a grid bifunction's samples, node by node.
Bifunction convex_closure(const Bifunction& h);

}  // namespace fitzbr

#endif
