#ifndef FITZBR_QUADRATIC_HPP
#define FITZBR_QUADRATIC_HPP

#include <optional>

#include "fitzbr/extended_real.hpp"
#include "fitzbr/point.hpp"

namespace fitzbr {

// h(u) = 0.5 u'Pu + q'u + r on the affine set {Eu = d}, +inf elsewhere.
// Closed under conjugation, restriction shifts, linear perturbation and
// diagonal rescaling, which makes it the common normal form for every
// closed-form quadratic object in the library. P need not be definite;
// an indefinite P conjugates to the identically-infinite function.
struct QuadraticOnAffine {
    Mat P;   // d x d, symmetric
    Vec q;   // d
    double r = 0.0;
    Mat E;   // k x d, k == 0 for an unconstrained quadratic
    Vec d;   // k
    bool always_infinite = false;

    static QuadraticOnAffine unconstrained(Mat P, Vec q, double r);
    static QuadraticOnAffine constrained(Mat P, Vec q, double r, Mat E, Vec d);
    static QuadraticOnAffine infinite(int dim);

    int dim() const { return static_cast<int>(q.size()); }

    ExtReal eval(const Vec& u) const;

    QuadraticOnAffine conjugate() const;

    struct MinResult {
        ExtReal value;
        std::optional<Vec> argmin;
    };
    MinResult minimize() const;

    // g(u) = h(u + s)
    QuadraticOnAffine shifted(const Vec& s) const;
    // g(u) = h(u) + lin.u + add
    QuadraticOnAffine plus_linear(const Vec& lin, double add) const;
    // g(u) = h(u) + 0.5*alpha*|u|^2
    QuadraticOnAffine plus_half_sq(double alpha) const;
    // g(u) = h(diag(scale) u), nonzero entries
    QuadraticOnAffine rescaled(const Vec& scale) const;
    // pointwise sum; both parts keep their own affine constraints
    QuadraticOnAffine plus(const QuadraticOnAffine& o) const;
};

// Symmetric PSD test with a relative eigenvalue tolerance.
bool is_psd(const Mat& A, double tol = 1e-10);

}  // namespace fitzbr

#endif
