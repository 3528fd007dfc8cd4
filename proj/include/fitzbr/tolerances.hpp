#ifndef FITZBR_TOLERANCES_HPP
#define FITZBR_TOLERANCES_HPP

namespace fitzbr {

// Every numeric result belongs to one of two accuracy classes: values that
// flow only through closed-form algebra, and values touched by a sampled
// grid anywhere along the way.
enum class TolClass { Strict, Grid };

inline TolClass combine(TolClass a, TolClass b) {
    return (a == TolClass::Grid || b == TolClass::Grid) ? TolClass::Grid : TolClass::Strict;
}

namespace tol {
// Monotonicity slack: analytic operators vs. sampled graphs.
inline constexpr double mono_analytic = 1e-9;
inline constexpr double mono_sampled = 1e-6;
// Exact-x match tolerance for sampled-graph evaluation.
inline constexpr double graph_x = 1e-9;
// Conjugation / duality-gap noise floors.
inline constexpr double dual_strict = 1e-9;
inline constexpr double dual_grid = 1e-6;
// Representation checks (majorization, family membership, conjugate pairs).
inline constexpr double rep_strict = 1e-9;
inline constexpr double rep_grid = 1e-6;
// Refinement arithmetic slack.
inline constexpr double ref_strict = 1e-9;
inline constexpr double ref_grid = 1e-6;
// Stopping gap for the refinement iteration.
inline constexpr double gap = 1e-8;
// Maximality probe target distance and default outer budget.
inline constexpr double probe = 1e-3;
inline constexpr int probe_budget = 200;
// Membership tolerance for affine constraint sets.
inline constexpr double affine_set = 1e-9;

inline double dual(TolClass c) { return c == TolClass::Strict ? dual_strict : dual_grid; }
inline double rep(TolClass c) { return c == TolClass::Strict ? rep_strict : rep_grid; }
inline double ref(TolClass c) { return c == TolClass::Strict ? ref_strict : ref_grid; }
inline double mono(TolClass c) { return c == TolClass::Strict ? mono_analytic : mono_sampled; }
}  // namespace tol

}  // namespace fitzbr

#endif
