#ifndef FITZBR_SIMPLEX_HPP
#define FITZBR_SIMPLEX_HPP

#include "fitzbr/extended_real.hpp"
#include "fitzbr/point.hpp"

namespace fitzbr {

// Value at `query` of the lower convex hull of the finite epigraph
// {(points.col(i), values(i))}: the optimal value of
//   min sum(lambda_i * values_i)  s.t.  sum(lambda_i * points_i) = query,
//                                       sum(lambda_i) = 1, lambda >= 0.
// Returns +inf when query lies outside the convex hull of the points.
// Solved by a dense two-phase simplex; intended for desk-scale inputs.
ExtReal lower_hull_value(const Mat& points, const Vec& values, const Vec& query,
                         double feas_tol = 1e-8);

// Minimize 0.5*||G*lambda||^2 + c.lambda over the unit simplex.
// Active-set method with finite termination at desk scale; `lambda` is the
// minimizer, `value` the optimal objective.
struct SimplexQpResult {
    Vec lambda;
    double value = 0.0;
    int iterations = 0;
};
SimplexQpResult simplex_qp(const Mat& G, const Vec& c);

}  // namespace fitzbr

#endif
