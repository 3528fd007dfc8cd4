#include "fitzbr/quadratic.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "fitzbr/tolerances.hpp"

namespace fitzbr {

namespace {

struct AffineBasis {
    Vec u0;   // particular solution of Eu = d
    Mat Z;    // orthonormal columns spanning null(E); d x nz (nz may be 0)
    bool feasible = true;
};

AffineBasis affine_basis(const Mat& E, const Vec& d, int dim) {
    AffineBasis ab;
    if (E.rows() == 0) {
        ab.u0 = Vec::Zero(dim);
        ab.Z = Mat::Identity(dim, dim);
        return ab;
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(E);
    ab.u0 = cod.solve(d);
    if ((E * ab.u0 - d).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + d.lpNorm<Eigen::Infinity>())) {
        ab.feasible = false;
        return ab;
    }
    // null space via SVD of E
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
    double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    double stol = 1e-11 * std::max(1.0, smax);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > stol) ++rank;
    ab.Z = svd.matrixV().rightCols(dim - rank);
    return ab;
}

}  // namespace

QuadraticOnAffine QuadraticOnAffine::unconstrained(Mat P, Vec q, double r) {
    QuadraticOnAffine h;
    const int n = static_cast<int>(q.size());
    h.P = 0.5 * (P + P.transpose());
    h.q = std::move(q);
    h.r = r;
    h.E = Mat(0, n);
    h.d = Vec(0);
    return h;
}

QuadraticOnAffine QuadraticOnAffine::constrained(Mat P, Vec q, double r, Mat E, Vec d) {
    QuadraticOnAffine h = unconstrained(std::move(P), std::move(q), r);
    h.E = std::move(E);
    h.d = std::move(d);
    return h;
}

QuadraticOnAffine QuadraticOnAffine::infinite(int dim) {
    QuadraticOnAffine h = unconstrained(Mat::Zero(dim, dim), Vec::Zero(dim), 0.0);
    h.always_infinite = true;
    return h;
}

ExtReal QuadraticOnAffine::eval(const Vec& u) const {
    if (always_infinite) return ExtReal::pos_inf();
    if (E.rows() > 0) {
        double resid = (E * u - d).lpNorm<Eigen::Infinity>();
        if (resid > tol::affine_set * (1.0 + u.lpNorm<Eigen::Infinity>())) return ExtReal::pos_inf();
    }
    return ExtReal(0.5 * u.dot(P * u) + q.dot(u) + r);
}

QuadraticOnAffine QuadraticOnAffine::conjugate() const {
    if (always_infinite)
        throw std::domain_error("QuadraticOnAffine: conjugate of an identically infinite function");
    const int n = dim();
    AffineBasis ab = affine_basis(E, d, n);
    if (!ab.feasible)
        throw std::domain_error("QuadraticOnAffine: conjugate of an improper (empty-domain) function");

    const int nz = static_cast<int>(ab.Z.cols());
    Vec a = q + P * ab.u0;

    if (nz == 0) {
        // Domain is the single point u0: conjugate is affine.
        QuadraticOnAffine out = unconstrained(Mat::Zero(n, n), ab.u0, -q.dot(ab.u0) - 0.5 * ab.u0.dot(P * ab.u0) - r);
        return out;
    }

    Mat Pt = ab.Z.transpose() * P * ab.Z;
    Pt = 0.5 * (Pt + Pt.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Pt);
    const Vec& ev = es.eigenvalues();
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    double etol = 1e-10 * scale;
    if (ev(0) < -etol) return infinite(n);  // negative curvature: sup is +inf everywhere

    Mat pinv = Mat::Zero(nz, nz);
    int nnull = 0;
    for (int i = 0; i < nz; ++i) {
        if (ev(i) > etol)
            pinv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / ev(i);
        else
            ++nnull;
    }
    Mat Pstar = ab.Z * pinv * ab.Z.transpose();
    Vec qstar = ab.u0 - Pstar * a;
    double rstar = 0.5 * a.dot(Pstar * a) - q.dot(ab.u0) - 0.5 * ab.u0.dot(P * ab.u0) - r;

    Mat Estar(nnull, n);
    Vec dstar(nnull);
    int row = 0;
    for (int i = 0; i < nz; ++i) {
        if (ev(i) <= etol) {
            Estar.row(row) = (ab.Z * es.eigenvectors().col(i)).transpose();
            dstar(row) = Estar.row(row).dot(a);
            ++row;
        }
    }
    return constrained(std::move(Pstar), std::move(qstar), rstar, std::move(Estar), std::move(dstar));
}

QuadraticOnAffine::MinResult QuadraticOnAffine::minimize() const {
    if (always_infinite) return {ExtReal::pos_inf(), std::nullopt};
    const int n = dim();
    AffineBasis ab = affine_basis(E, d, n);
    if (!ab.feasible) return {ExtReal::pos_inf(), std::nullopt};
    const int nz = static_cast<int>(ab.Z.cols());
    if (nz == 0) {
        return {eval(ab.u0), ab.u0};
    }
    Mat Pt = ab.Z.transpose() * P * ab.Z;
    Pt = 0.5 * (Pt + Pt.transpose());
    Vec c0 = ab.Z.transpose() * (P * ab.u0 + q);
    Eigen::SelfAdjointEigenSolver<Mat> es(Pt);
    const Vec& ev = es.eigenvalues();
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    double etol = 1e-10 * scale;
    if (ev(0) < -etol) return {ExtReal::neg_inf(), std::nullopt};
    Vec t = Vec::Zero(nz);
    for (int i = 0; i < nz; ++i) {
        double proj = es.eigenvectors().col(i).dot(c0);
        if (ev(i) > etol) {
            t -= es.eigenvectors().col(i) * (proj / ev(i));
        } else if (std::abs(proj) > 1e-9 * (1.0 + c0.norm())) {
            return {ExtReal::neg_inf(), std::nullopt};  // linear descent direction
        }
    }
    Vec u = ab.u0 + ab.Z * t;
    return {ExtReal(0.5 * u.dot(P * u) + q.dot(u) + r), u};
}

QuadraticOnAffine QuadraticOnAffine::shifted(const Vec& s) const {
    QuadraticOnAffine h = *this;
    if (always_infinite) return h;
    h.q = P * s + q;
    h.r = 0.5 * s.dot(P * s) + q.dot(s) + r;
    if (E.rows() > 0) h.d = d - E * s;
    return h;
}

QuadraticOnAffine QuadraticOnAffine::plus_linear(const Vec& lin, double add) const {
    QuadraticOnAffine h = *this;
    if (always_infinite) return h;
    h.q += lin;
    h.r += add;
    return h;
}

QuadraticOnAffine QuadraticOnAffine::plus_half_sq(double alpha) const {
    QuadraticOnAffine h = *this;
    if (always_infinite) return h;
    h.P += alpha * Mat::Identity(dim(), dim());
    return h;
}

QuadraticOnAffine QuadraticOnAffine::rescaled(const Vec& scale) const {
    QuadraticOnAffine h = *this;
    if (always_infinite) return h;
    Mat D = scale.asDiagonal();
    h.P = D * P * D;
    h.q = D * q;
    if (E.rows() > 0) h.E = E * D;
    return h;
}

QuadraticOnAffine QuadraticOnAffine::plus(const QuadraticOnAffine& o) const {
    if (dim() != o.dim()) throw std::invalid_argument("QuadraticOnAffine::plus: dim mismatch");
    if (always_infinite || o.always_infinite) return infinite(dim());
    QuadraticOnAffine h = *this;
    h.P += o.P;
    h.q += o.q;
    h.r += o.r;
    Mat E2(E.rows() + o.E.rows(), dim());
    Vec d2(E.rows() + o.E.rows());
    if (E.rows() > 0) { E2.topRows(E.rows()) = E; d2.head(E.rows()) = d; }
    if (o.E.rows() > 0) { E2.bottomRows(o.E.rows()) = o.E; d2.tail(o.E.rows()) = o.d; }
    h.E = std::move(E2);
    h.d = std::move(d2);
    return h;
}

bool is_psd(const Mat& A, double tol) {
    Mat S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return es.eigenvalues()(0) >= -tol * scale;
}

}  // namespace fitzbr
