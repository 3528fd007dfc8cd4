#ifndef FITZBR_POINT_HPP
#define FITZBR_POINT_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace fitzbr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A primal-dual pair (x, x*) in R^n x R^n, dual identified with R^n through
// the Euclidean pairing.
struct PrimalDualPoint {
    Vec x;
    Vec xstar;

    PrimalDualPoint() = default;
    PrimalDualPoint(Vec x_, Vec xstar_) : x(std::move(x_)), xstar(std::move(xstar_)) {
        if (x.size() != xstar.size() || x.size() < 1)
            throw std::invalid_argument("PrimalDualPoint: x and xstar must share dimension n >= 1");
    }

    Eigen::Index dim() const { return x.size(); }

    // Stacked (x, x*) as one vector in R^{2n}.
    Vec stacked() const {
        Vec u(2 * x.size());
        u << x, xstar;
        return u;
    }
    static PrimalDualPoint from_stacked(const Vec& u) {
        if (u.size() % 2 != 0) throw std::invalid_argument("from_stacked: odd length");
        Eigen::Index n = u.size() / 2;
        return PrimalDualPoint(u.head(n), u.tail(n));
    }
};

inline double duality_product(const PrimalDualPoint& p) {
    return p.x.dot(p.xstar);
}

inline PrimalDualPoint make_point(std::initializer_list<double> x, std::initializer_list<double> xs) {
    Vec a(static_cast<Eigen::Index>(x.size())), b(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double v : x) a(i++) = v;
    i = 0;
    for (double v : xs) b(i++) = v;
    return PrimalDualPoint(std::move(a), std::move(b));
}

// Primal norm rescaling s with induced dual scale 1/s; the duality product
// is invariant under the pair.
struct NormWeight {
    double s;
    explicit NormWeight(double s_) : s(s_) {
        if (!(s > 0.0)) throw std::invalid_argument("NormWeight: s must be positive");
    }
    PrimalDualPoint apply(const PrimalDualPoint& p) const {
        return PrimalDualPoint(s * p.x, p.xstar / s);
    }
    PrimalDualPoint unapply(const PrimalDualPoint& p) const {
        return PrimalDualPoint(p.x / s, s * p.xstar);
    }
};

}  // namespace fitzbr

#endif
