#ifndef FITZBR_REFINE_HPP
#define FITZBR_REFINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "fitzbr/bifunction.hpp"
#include "fitzbr/operators.hpp"
#include "fitzbr/point.hpp"

namespace fitzbr {

struct RegularizedSolution {
    PrimalDualPoint point;           // (x~, x~*)
    double value = 0.0;              // h + 0.5|x|^2 + 0.5|x*|^2 at the point
    PrimalDualPoint dual_certificate;  // (z*^, z**^), minimizer of h* + reg
    double certificate_value = 0.0;
    double norm_bound = 0.0;         // h(0,0); +inf on the unbounded branch
    bool norm_bound_claimed = true;  // false when h(0,0) = +inf
    bool exact = true;               // inner solves were closed-form
};

// A point with h + half-squared-norms below eps, with the norm bounds of the
// regularized minimization. Requires the dual condition (verified by the
// caller; a violated precondition surfaces as SolverFailure).
RegularizedSolution regularized_min(const Bifunction& h, double eps);

// One refinement step from z: a point with gap below eps whose distance to z
// is controlled by the gap at z. Returns z itself when the gap at z is
// already below eps.
PrimalDualPoint br_step(const Bifunction& h, const PrimalDualPoint& z, double eps);

struct RefinementTrace {
    std::vector<PrimalDualPoint> iterates;
    std::vector<double> gaps;           // gaps[k] = h(x_k) - pi(x_k)
    std::vector<double> step_norm_x;    // |x_{k+1} - x_k|, index k
    std::vector<double> step_norm_xstar;
    std::vector<bool> step_bounds_ok;   // step^2 <= gap_k + tol
    double theta = 0.0;
    double eps0 = 0.0;
    double scale = 1.0;  // norm weight the run used (1 for br_refine)
    PrimalDualPoint limit;
    bool completed = false;
    std::string diagnostic;
};

// The inductive refinement: geometric gap decay with per-step distance
// bounds; stops when the gap falls to tol_gap.
RefinementTrace br_refine(const Bifunction& h, const PrimalDualPoint& p, double eps,
                          double tol_gap = tol::gap);

// Same iteration under the primal scale s = sqrt(eps)/lambda, giving limit
// bounds |x - x_lim| < lambda and |x* - x*_lim| < eps/lambda.
RefinementTrace br_refine_scaled(const Bifunction& h, const PrimalDualPoint& p, double eps,
                                 double lambda, double tol_gap = tol::gap);

struct StrictBrResult {
    PrimalDualPoint point;  // on the graph of T after snapping
    double snap_distance = 0.0;
    RefinementTrace trace;
    EnlargementReport enlargement;
};

// Strict Bronsted-Rockafellar property: from a point of the eps-enlargement,
// a graph point within (lambda, eta/lambda) for any eta > eps.
StrictBrResult strict_br(const MonotoneOperator& T, const PrimalDualPoint& p, double eps,
                         double eta, double lambda);

struct ProbeResult {
    bool rejected = false;
    double precondition_inf = 0.0;
    std::optional<PrimalDualPoint> precondition_witness;
    std::vector<PrimalDualPoint> sequence;
    std::vector<double> distances;
    bool verdict = false;
    int steps = 0;
};

// Exhibits a monotonically-related point as the limit of graph points by
// driving the translated regularized values below 1/k^2 and refining each to
// the graph.
ProbeResult maximality_probe(const Bifunction& h, const PrimalDualPoint& z,
                             const std::vector<PrimalDualPoint>& graph_sample,
                             int budget = tol::probe_budget, double tol_probe = tol::probe);

// Points of a sweep grid where h equals the pairing (the graph the
// bifunction induces).
std::vector<PrimalDualPoint> equality_graph_sample(const Bifunction& h, const TestGrid& grid);

}  // namespace fitzbr

#endif
