#include "fitzbr/convex_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <Eigen/SVD>

#include "fitzbr/errors.hpp"
#include "fitzbr/simplex.hpp"

namespace fitzbr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoxTol = 1e-12;

double soft_threshold(double u, double w) {
    if (u > w) return u - w;
    if (u < -w) return u + w;
    return 0.0;
}
}  // namespace

bool DualBox::contains(const Vec& v, double tol) const {
    if (empty) return false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < lo(i) - tol || v(i) > hi(i) + tol) return false;
    }
    return true;
}

Vec DualBox::clamp(const Vec& v) const {
    Vec out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out(i) = std::min(std::max(v(i), lo(i)), hi(i));
    return out;
}

bool DualBox::is_singleton(double tol) const {
    if (empty) return false;
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(hi(i) - lo(i) <= tol)) return false;
    return true;
}

namespace detail {

class ConvexFunctionImpl : public std::enable_shared_from_this<ConvexFunctionImpl> {
public:
    virtual ~ConvexFunctionImpl() = default;
    virtual int dim() const = 0;
    virtual FnKind fn_kind() const = 0;
    virtual ExtReal eval(const Vec& x) const = 0;
    virtual TolClass tol_class() const { return TolClass::Strict; }
    virtual ConvexFunction conjugate_impl() const = 0;
    virtual bool has_subdiff() const { return false; }
    virtual DualBox subdiff(const Vec&) const {
        throw std::logic_error("ConvexFunction: no closed-form subdifferential for this kind");
    }
    virtual ProxResult prox_shifted(const Vec& shift, const Vec& lin) const = 0;
    virtual ConvexFunction rescaled(const Vec& scale) const = 0;
    virtual std::optional<QuadraticOnAffine> as_qoa() const { return std::nullopt; }
    virtual std::optional<ConvexFunction::GridData> grid_data() const { return std::nullopt; }
    virtual std::optional<std::pair<Vec, Vec>> valid_slope_box() const { return std::nullopt; }
    virtual bool boundary_warning() const { return false; }
    virtual bool valid_at(const Vec&) const { return true; }
    virtual ConvexFunction::QuadParts quad_parts() const {
        throw std::logic_error("ConvexFunction: not a quadratic kind");
    }
    virtual const Vec& abs_weights() const { throw std::logic_error("ConvexFunction: not abs_norm"); }
    virtual std::pair<Vec, Vec> box_bounds() const {
        throw std::logic_error("ConvexFunction: not a box kind");
    }
    virtual const std::vector<ConvexFunction>& pieces() const {
        throw std::logic_error("ConvexFunction: not a separable sum");
    }
    virtual AffModParts affmod_parts() const {
        throw std::logic_error("ConvexFunction: not affine-modified");
    }
    virtual ConvexFunction::PolyhedralParts polyhedral_parts() const {
        throw std::logic_error("ConvexFunction: not a polyhedral kind");
    }
    virtual bool provably_convex() const { return true; }
    virtual std::optional<ConvexFunction> conjugate_grid(const std::vector<GridAxis>&) const {
        return std::nullopt;
    }

    ConvexFunction conjugate_cached() const {
        std::call_once(conj_once_, [this] { conj_cache_ = std::make_shared<ConvexFunction>(conjugate_impl()); });
        return *conj_cache_;
    }

private:
    mutable std::once_flag conj_once_;
    mutable std::shared_ptr<ConvexFunction> conj_cache_;
};

namespace {

ConvexFunction wrap(std::shared_ptr<const ConvexFunctionImpl> p) { return ConvexFunction(std::move(p)); }

void check_dim(const ConvexFunctionImpl& f, const Vec& x) {
    if (x.size() != f.dim()) throw std::invalid_argument("ConvexFunction: dimension mismatch");
}

// ---------------------------------------------------------------- quadratic

class QuadraticFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::Quadratic; }
    QuadraticFn(Mat A, Vec b, double c) : A_(std::move(A)), b_(std::move(b)), c_(c) {
        A_ = 0.5 * (A_ + A_.transpose()).eval();
        if (A_.rows() != A_.cols() || A_.rows() != b_.size())
            throw std::invalid_argument("quadratic: shape mismatch");
        if (!is_psd(A_)) throw std::invalid_argument("quadratic: A must be positive semidefinite");
    }
    int dim() const override { return static_cast<int>(b_.size()); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return ExtReal(0.5 * x.dot(A_ * x) + b_.dot(x) + c_);
    }
    ConvexFunction conjugate_impl() const override {
        return ConvexFunction::from_qoa(as_qoa()->conjugate());
    }
    bool has_subdiff() const override { return true; }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        Vec g = A_ * x + b_;
        return DualBox{g, g, false};
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        auto m = as_qoa()->shifted(shift).plus_linear(lin, 0.0).plus_half_sq(1.0).minimize();
        return ProxResult{*m.argmin, m.value.value(), true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        Mat D = s.asDiagonal();
        return ConvexFunction::quadratic(D * A_ * D, D * b_, c_);
    }
    std::optional<QuadraticOnAffine> as_qoa() const override {
        return QuadraticOnAffine::unconstrained(A_, b_, c_);
    }
    ConvexFunction::QuadParts quad_parts() const override { return {A_, b_, c_}; }

private:
    Mat A_;
    Vec b_;
    double c_;
};

// --------------------------------------------------------------------- qoa

class QoaFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::Qoa; }
    explicit QoaFn(QuadraticOnAffine q) : q_(std::move(q)) {}
    int dim() const override { return q_.dim(); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return q_.eval(x);
    }
    ConvexFunction conjugate_impl() const override { return ConvexFunction::from_qoa(q_.conjugate()); }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        auto m = q_.shifted(shift).plus_linear(lin, 0.0).plus_half_sq(1.0).minimize();
        if (!m.argmin) throw SolverFailure("qoa prox: problem infeasible or unbounded");
        return ProxResult{*m.argmin, m.value.value(), true};
    }
    ConvexFunction rescaled(const Vec& s) const override { return ConvexFunction::from_qoa(q_.rescaled(s)); }
    std::optional<QuadraticOnAffine> as_qoa() const override { return q_; }
    bool provably_convex() const override {
        if (q_.always_infinite) return true;
        if (q_.E.rows() == 0) return is_psd(q_.P);
        // convex iff the curvature restricted to the feasible directions is PSD
        Eigen::JacobiSVD<Mat> svd(q_.E, Eigen::ComputeFullV);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        double stol = 1e-11 * std::max(1.0, smax);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > stol) ++rank;
        Mat Z = svd.matrixV().rightCols(q_.dim() - rank);
        if (Z.cols() == 0) return true;
        return is_psd(Z.transpose() * q_.P * Z);
    }

private:
    QuadraticOnAffine q_;
};

// --------------------------------------------------------------------- abs

class AbsFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::AbsNorm; }
    explicit AbsFn(Vec w) : w_(std::move(w)) {
        if ((w_.array() <= 0).any()) throw std::invalid_argument("abs_norm: weights must be positive");
    }
    int dim() const override { return static_cast<int>(w_.size()); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return ExtReal(w_.dot(x.cwiseAbs()));
    }
    ConvexFunction conjugate_impl() const override { return ConvexFunction::box_indicator(-w_, w_); }
    bool has_subdiff() const override { return true; }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        DualBox b{Vec(x.size()), Vec(x.size()), false};
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) > kBoxTol) { b.lo(i) = b.hi(i) = w_(i); }
            else if (x(i) < -kBoxTol) { b.lo(i) = b.hi(i) = -w_(i); }
            else { b.lo(i) = -w_(i); b.hi(i) = w_(i); }
        }
        return b;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        // per-coordinate: y* = soft(shift - lin, w), x = y - shift
        Vec x(dim());
        for (int i = 0; i < dim(); ++i) x(i) = soft_threshold(shift(i) - lin(i), w_(i)) - shift(i);
        double value = eval(x + shift).value() + lin.dot(x) + 0.5 * x.squaredNorm();
        return ProxResult{x, value, true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction::abs_norm_weights(w_.cwiseProduct(s));
    }
    const Vec& abs_weights() const override { return w_; }

private:
    Vec w_;
};

// ------------------------------------------------------------ box indicator

class BoxIndFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::BoxIndicator; }
    BoxIndFn(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.size() != hi_.size() || (lo_.array() > hi_.array()).any())
            throw std::invalid_argument("box_indicator: need lo <= hi");
    }
    int dim() const override { return static_cast<int>(lo_.size()); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x(i) < lo_(i) - kBoxTol || x(i) > hi_(i) + kBoxTol) return ExtReal::pos_inf();
        return ExtReal(0.0);
    }
    ConvexFunction conjugate_impl() const override { return ConvexFunction::box_support(lo_, hi_); }
    bool has_subdiff() const override { return true; }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        DualBox b{Vec(x.size()), Vec(x.size()), false};
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) < lo_(i) - kBoxTol || x(i) > hi_(i) + kBoxTol) { b.empty = true; return b; }
            bool at_lo = x(i) <= lo_(i) + kBoxTol;
            bool at_hi = x(i) >= hi_(i) - kBoxTol;
            b.lo(i) = at_lo ? -kInf : 0.0;
            b.hi(i) = at_hi ? kInf : 0.0;
        }
        return b;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        Vec x(dim());
        for (int i = 0; i < dim(); ++i)
            x(i) = std::min(std::max(-lin(i), lo_(i) - shift(i)), hi_(i) - shift(i));
        double value = lin.dot(x) + 0.5 * x.squaredNorm();
        return ProxResult{x, value, true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction::box_indicator(lo_.cwiseQuotient(s), hi_.cwiseQuotient(s));
    }
    std::pair<Vec, Vec> box_bounds() const override { return {lo_, hi_}; }

private:
    Vec lo_, hi_;
};

// -------------------------------------------------------------- box support

class BoxSupFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::BoxSupport; }
    BoxSupFn(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.size() != hi_.size() || (lo_.array() > hi_.array()).any())
            throw std::invalid_argument("box_support: need lo <= hi");
    }
    int dim() const override { return static_cast<int>(lo_.size()); }
    ExtReal eval(const Vec& s) const override {
        check_dim(*this, s);
        double v = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) v += std::max(lo_(i) * s(i), hi_(i) * s(i));
        return ExtReal(v);
    }
    ConvexFunction conjugate_impl() const override { return ConvexFunction::box_indicator(lo_, hi_); }
    bool has_subdiff() const override { return true; }
    DualBox subdiff(const Vec& s) const override {
        check_dim(*this, s);
        DualBox b{Vec(s.size()), Vec(s.size()), false};
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > kBoxTol) { b.lo(i) = b.hi(i) = hi_(i); }
            else if (s(i) < -kBoxTol) { b.lo(i) = b.hi(i) = lo_(i); }
            else { b.lo(i) = lo_(i); b.hi(i) = hi_(i); }
        }
        return b;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        // per coordinate: min over y of max(lo*y, hi*y) + 0.5 y^2 + beta y,
        // with y = x + shift and beta = lin - shift.
        Vec x(dim());
        for (int i = 0; i < dim(); ++i) {
            double beta = lin(i) - shift(i);
            double yp = std::max(0.0, -(beta + hi_(i)));
            double yn = std::min(0.0, -(beta + lo_(i)));
            auto val = [&](double y) {
                return std::max(lo_(i) * y, hi_(i) * y) + 0.5 * y * y + beta * y;
            };
            x(i) = (val(yp) <= val(yn) ? yp : yn) - shift(i);
        }
        double value = eval(x + shift).value() + lin.dot(x) + 0.5 * x.squaredNorm();
        return ProxResult{x, value, true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction::box_support(lo_.cwiseProduct(s), hi_.cwiseProduct(s));
    }
    std::pair<Vec, Vec> box_bounds() const override { return {lo_, hi_}; }

private:
    Vec lo_, hi_;
};

// ------------------------------------------------------------ separable sum

class SepSumFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::SeparableSum; }
    explicit SepSumFn(std::vector<ConvexFunction> pieces) : pieces_(std::move(pieces)) {
        if (pieces_.empty()) throw std::invalid_argument("separable_sum: empty");
        for (const auto& p : pieces_)
            if (p.dim() != 1) throw std::invalid_argument("separable_sum: pieces must be 1-D");
    }
    int dim() const override { return static_cast<int>(pieces_.size()); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        ExtReal v(0.0);
        for (int i = 0; i < dim(); ++i) v += pieces_[i].eval(x.segment(i, 1));
        return v;
    }
    TolClass tol_class() const override {
        TolClass c = TolClass::Strict;
        for (const auto& p : pieces_) c = combine(c, p.tol_class());
        return c;
    }
    ConvexFunction conjugate_impl() const override {
        std::vector<ConvexFunction> cs;
        cs.reserve(pieces_.size());
        for (const auto& p : pieces_) cs.push_back(p.conjugate());
        return ConvexFunction::separable_sum(std::move(cs));
    }
    bool has_subdiff() const override {
        for (const auto& p : pieces_)
            if (!p.has_closed_subdifferential()) return false;
        return true;
    }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        DualBox b{Vec(dim()), Vec(dim()), false};
        for (int i = 0; i < dim(); ++i) {
            DualBox bi = pieces_[i].subdifferential(x.segment(i, 1));
            if (bi.empty) { b.empty = true; return b; }
            b.lo(i) = bi.lo(0);
            b.hi(i) = bi.hi(0);
        }
        return b;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        Vec x(dim());
        double value = 0.0;
        bool exact = true;
        for (int i = 0; i < dim(); ++i) {
            auto r = pieces_[i].prox_shifted(shift.segment(i, 1), lin.segment(i, 1));
            x(i) = r.x(0);
            value += r.value;
            exact = exact && r.exact;
        }
        return ProxResult{x, value, exact};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        std::vector<ConvexFunction> ps;
        ps.reserve(pieces_.size());
        for (int i = 0; i < dim(); ++i) ps.push_back(pieces_[i].rescaled(s.segment(i, 1)));
        return ConvexFunction::separable_sum(std::move(ps));
    }
    std::optional<QuadraticOnAffine> as_qoa() const override {
        const int n = dim();
        Mat P = Mat::Zero(n, n);
        Vec q = Vec::Zero(n);
        double r = 0.0;
        std::vector<std::pair<int, QuadraticOnAffine>> cons;
        int krows = 0;
        for (int i = 0; i < n; ++i) {
            auto qi = pieces_[i].as_qoa();
            if (!qi) return std::nullopt;
            P(i, i) = qi->P(0, 0);
            q(i) = qi->q(0);
            r += qi->r;
            if (qi->E.rows() > 0) {
                krows += static_cast<int>(qi->E.rows());
                cons.emplace_back(i, *qi);
            }
        }
        Mat E = Mat::Zero(krows, n);
        Vec d = Vec::Zero(krows);
        int row = 0;
        for (auto& [i, qi] : cons) {
            for (int k = 0; k < qi.E.rows(); ++k) {
                E(row, i) = qi.E(k, 0);
                d(row) = qi.d(k);
                ++row;
            }
        }
        return QuadraticOnAffine::constrained(std::move(P), std::move(q), r, std::move(E), std::move(d));
    }
    const std::vector<ConvexFunction>& pieces() const override { return pieces_; }
    bool provably_convex() const override {
        for (const auto& p : pieces_)
            if (!p.provably_convex()) return false;
        return true;
    }

private:
    std::vector<ConvexFunction> pieces_;
};

// -------------------------------------------------- affine-modified wrapper

class AffModFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::AffineModified; }
    AffModFn(ConvexFunction base, Vec shift, Vec lin, double add)
        : base_(std::move(base)), shift_(std::move(shift)), lin_(std::move(lin)), add_(add) {
        if (shift_.size() != base_.dim() || lin_.size() != base_.dim())
            throw std::invalid_argument("affine_modified: shape mismatch");
    }
    int dim() const override { return base_.dim(); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return base_.eval(x - shift_) + ExtReal(lin_.dot(x) + add_);
    }
    TolClass tol_class() const override { return base_.tol_class(); }
    ConvexFunction conjugate_impl() const override {
        // (base(. - shift) + lin. + add)* (s) = base*(s - lin) + shift.s - lin.shift - add
        return ConvexFunction::affine_modified(base_.conjugate(), lin_, shift_, -lin_.dot(shift_) - add_);
    }
    bool has_subdiff() const override { return base_.has_closed_subdifferential(); }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        DualBox b = base_.subdifferential(x - shift_);
        if (b.empty) return b;
        b.lo += lin_;
        b.hi += lin_;
        return b;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        auto r = base_.prox_shifted(shift - shift_, lin + lin_);
        r.value += lin_.dot(shift) + add_;
        return r;
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction::affine_modified(base_.rescaled(s), shift_.cwiseQuotient(s),
                                               lin_.cwiseProduct(s), add_);
    }
    std::optional<QuadraticOnAffine> as_qoa() const override {
        auto q = base_.as_qoa();
        if (!q) return std::nullopt;
        return q->shifted(-shift_).plus_linear(lin_, add_);
    }
    std::optional<std::pair<Vec, Vec>> valid_slope_box() const override {
        auto b = base_.valid_slope_box();
        if (!b) return std::nullopt;
        return std::make_pair(Vec(b->first + shift_), Vec(b->second + shift_));
    }
    bool boundary_warning() const override { return base_.boundary_warning(); }
    bool valid_at(const Vec& x) const override { return base_.impl().valid_at(x - shift_); }
    AffModParts affmod_parts() const override { return {base_, shift_, lin_, add_}; }
    bool provably_convex() const override { return base_.provably_convex(); }

private:
    ConvexFunction base_;
    Vec shift_, lin_;
    double add_;
};

// --------------------------------------------------- polyhedral kinds

class MaxAffineFn : public ConvexFunctionImpl {
public:
    MaxAffineFn(Mat G, Vec e, std::vector<std::uint8_t> interior = {},
                std::optional<std::pair<Vec, Vec>> slope_box = {}, TolClass cls = TolClass::Strict)
        : G_(std::move(G)), e_(std::move(e)), interior_(std::move(interior)),
          slope_box_(std::move(slope_box)), cls_(cls) {
        if (G_.cols() != e_.size() || G_.cols() == 0)
            throw std::invalid_argument("max_affine: shape mismatch");
    }
    FnKind fn_kind() const override { return FnKind::MaxAffine; }
    int dim() const override { return static_cast<int>(G_.rows()); }
    TolClass tol_class() const override { return cls_; }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return ExtReal((G_.transpose() * x + e_).maxCoeff());
    }
    ConvexFunction conjugate_impl() const override {
        return ConvexFunction::hull_of_points(G_, -e_);
    }
    bool valid_at(const Vec& x) const override {
        // as a conjugate of samples: exact where some maximizing sample is
        // interior to the sampled box
        if (interior_.empty()) return true;
        Vec vals = G_.transpose() * x + e_;
        double best = vals.maxCoeff();
        double tie = 1e-12 * (1.0 + std::abs(best));
        for (Eigen::Index i = 0; i < vals.size(); ++i)
            if (vals(i) >= best - tie && interior_[static_cast<std::size_t>(i)]) return true;
        return false;
    }
    std::optional<std::pair<Vec, Vec>> valid_slope_box() const override { return slope_box_; }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        // min_x max_i[<g_i, x+shift> + e_i] + lin.x + 0.5|x|^2 through the
        // simplex dual: v = x + lin, c_i = <g_i, lin - shift> - e_i.
        Vec c = G_.transpose() * (lin - shift) - e_;
        auto qp = simplex_qp(G_, c);
        Vec x = -(G_ * qp.lambda) - lin;
        double value = eval(x + shift).value() + lin.dot(x) + 0.5 * x.squaredNorm();
        return ProxResult{x, value, true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction(std::make_shared<MaxAffineFn>(s.asDiagonal() * G_, e_, interior_,
                                                            std::nullopt, cls_));
    }
    ConvexFunction::PolyhedralParts polyhedral_parts() const override { return {&G_, &e_}; }

private:
    Mat G_;
    Vec e_;
    std::vector<std::uint8_t> interior_;
    std::optional<std::pair<Vec, Vec>> slope_box_;
    TolClass cls_;
};

class HullFn : public ConvexFunctionImpl {
public:
    HullFn(Mat Q, Vec v) : Q_(std::move(Q)), v_(std::move(v)) {
        if (Q_.cols() != v_.size() || Q_.cols() == 0)
            throw std::invalid_argument("hull_of_points: shape mismatch");
    }
    FnKind fn_kind() const override { return FnKind::HullOfPoints; }
    int dim() const override { return static_cast<int>(Q_.rows()); }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        return lower_hull_value(Q_, v_, x);
    }
    ConvexFunction conjugate_impl() const override {
        return ConvexFunction::max_affine(Q_, -v_);
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        // hull argument y = Q lambda, x = y - shift
        Vec w0 = shift - lin;
        Vec c = v_ - Q_.transpose() * w0;
        auto qp = simplex_qp(Q_, c);
        Vec x = Q_ * qp.lambda - shift;
        double value = qp.value - lin.dot(shift) + 0.5 * shift.squaredNorm();
        return ProxResult{x, value, true};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        return ConvexFunction::hull_of_points(s.cwiseInverse().asDiagonal() * Q_, v_);
    }
    ConvexFunction::PolyhedralParts polyhedral_parts() const override { return {&Q_, &v_}; }

private:
    Mat Q_;
    Vec v_;
};

// ------------------------------------------ permuted block decomposition

class PermBlockFn : public ConvexFunctionImpl {
public:
    PermBlockFn(std::vector<ConvexFunction> blocks, std::vector<std::vector<int>> map)
        : blocks_(std::move(blocks)), map_(std::move(map)) {
        if (blocks_.size() != map_.size() || blocks_.empty())
            throw std::invalid_argument("permuted_blocks: shape mismatch");
        int total = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            if (static_cast<int>(map_[b].size()) != blocks_[b].dim())
                throw std::invalid_argument("permuted_blocks: map size vs block dim");
            total += blocks_[b].dim();
        }
        dim_ = total;
        std::vector<char> seen(static_cast<std::size_t>(total), 0);
        for (const auto& m : map_)
            for (int c : m) {
                if (c < 0 || c >= total || seen[static_cast<std::size_t>(c)])
                    throw std::invalid_argument("permuted_blocks: maps must partition coordinates");
                seen[static_cast<std::size_t>(c)] = 1;
            }
    }
    FnKind fn_kind() const override { return FnKind::PermutedBlocks; }
    int dim() const override { return dim_; }
    TolClass tol_class() const override {
        TolClass c = TolClass::Strict;
        for (const auto& b : blocks_) c = combine(c, b.tol_class());
        return c;
    }
    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        ExtReal v(0.0);
        for (std::size_t b = 0; b < blocks_.size(); ++b) v += blocks_[b].eval(gather(x, b));
        return v;
    }
    ConvexFunction conjugate_impl() const override {
        std::vector<ConvexFunction> cs;
        cs.reserve(blocks_.size());
        for (const auto& b : blocks_) cs.push_back(b.conjugate());
        return ConvexFunction::permuted_blocks(std::move(cs), map_);
    }
    bool has_subdiff() const override {
        for (const auto& b : blocks_)
            if (!b.has_closed_subdifferential()) return false;
        return true;
    }
    DualBox subdiff(const Vec& x) const override {
        check_dim(*this, x);
        DualBox out{Vec(dim_), Vec(dim_), false};
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            DualBox bb = blocks_[b].subdifferential(gather(x, b));
            if (bb.empty) { out.empty = true; return out; }
            for (std::size_t k = 0; k < map_[b].size(); ++k) {
                out.lo(map_[b][k]) = bb.lo(static_cast<Eigen::Index>(k));
                out.hi(map_[b][k]) = bb.hi(static_cast<Eigen::Index>(k));
            }
        }
        return out;
    }
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        Vec x(dim_);
        double value = 0.0;
        bool exact = true;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto r = blocks_[b].prox_shifted(gather(shift, b), gather(lin, b));
            for (std::size_t k = 0; k < map_[b].size(); ++k) x(map_[b][k]) = r.x(static_cast<Eigen::Index>(k));
            value += r.value;
            exact = exact && r.exact;
        }
        return ProxResult{x, value, exact};
    }
    ConvexFunction rescaled(const Vec& s) const override {
        std::vector<ConvexFunction> bs;
        bs.reserve(blocks_.size());
        for (std::size_t b = 0; b < blocks_.size(); ++b) bs.push_back(blocks_[b].rescaled(gather(s, b)));
        return ConvexFunction::permuted_blocks(std::move(bs), map_);
    }
    std::optional<QuadraticOnAffine> as_qoa() const override {
        Mat P = Mat::Zero(dim_, dim_);
        Vec q = Vec::Zero(dim_);
        double r = 0.0;
        std::vector<std::pair<std::size_t, QuadraticOnAffine>> cons;
        int krows = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto qb = blocks_[b].as_qoa();
            if (!qb) return std::nullopt;
            const auto& m = map_[b];
            for (std::size_t i = 0; i < m.size(); ++i) {
                q(m[i]) += qb->q(static_cast<Eigen::Index>(i));
                for (std::size_t j = 0; j < m.size(); ++j)
                    P(m[i], m[j]) += qb->P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
            r += qb->r;
            if (qb->E.rows() > 0) {
                krows += static_cast<int>(qb->E.rows());
                cons.emplace_back(b, *qb);
            }
        }
        Mat E = Mat::Zero(krows, dim_);
        Vec d = Vec::Zero(krows);
        int row = 0;
        for (auto& [b, qb] : cons) {
            const auto& m = map_[b];
            for (int k = 0; k < qb.E.rows(); ++k) {
                for (std::size_t i = 0; i < m.size(); ++i) E(row, m[i]) = qb.E(k, static_cast<Eigen::Index>(i));
                d(row) = qb.d(k);
                ++row;
            }
        }
        return QuadraticOnAffine::constrained(std::move(P), std::move(q), r, std::move(E), std::move(d));
    }
    bool valid_at(const Vec& x) const override {
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            if (!blocks_[b].impl().valid_at(gather(x, b))) return false;
        return true;
    }
    bool boundary_warning() const override {
        for (const auto& b : blocks_)
            if (b.boundary_warning()) return true;
        return false;
    }
    bool provably_convex() const override {
        for (const auto& b : blocks_)
            if (!b.provably_convex()) return false;
        return true;
    }
    const std::vector<ConvexFunction>& pieces() const override { return blocks_; }

private:
    Vec gather(const Vec& x, std::size_t b) const {
        Vec out(static_cast<Eigen::Index>(map_[b].size()));
        for (std::size_t k = 0; k < map_[b].size(); ++k) out(static_cast<Eigen::Index>(k)) = x(map_[b][k]);
        return out;
    }
    std::vector<ConvexFunction> blocks_;
    std::vector<std::vector<int>> map_;
    int dim_ = 0;
};

// -------------------------------------------------------------------- grid

class GridFn : public ConvexFunctionImpl {
public:
    FnKind fn_kind() const override { return FnKind::Grid; }
    GridFn(std::vector<GridAxis> axes, std::vector<double> values, bool hull_consistent,
           std::vector<std::uint8_t> valid = {}, bool boundary_warn = false)
        : axes_(std::move(axes)), values_(std::move(values)), valid_(std::move(valid)),
          hull_consistent_(hull_consistent), boundary_warn_(boundary_warn) {
        if (values_.size() != grid_size(axes_)) throw std::invalid_argument("grid: value count mismatch");
        bool any_finite = false;
        for (double v : values_) {
            if (std::isnan(v) || v == -kInf) throw std::invalid_argument("grid: values must be > -inf");
            any_finite = any_finite || std::isfinite(v);
        }
        if (!any_finite) throw std::invalid_argument("grid: improper (no finite sample)");
        if (axes_.size() == 1) {
            std::vector<double> xs(axes_[0].m);
            for (int i = 0; i < axes_[0].m; ++i) xs[i] = axes_[0].coord(i);
            hull1d_ = LowerHull1D(xs, values_);
        }
        // finite samples as columns (hull evaluation and exact conjugation)
        std::size_t nf = 0;
        for (double v : values_)
            if (std::isfinite(v)) ++nf;
        pts_.resize(static_cast<Eigen::Index>(axes_.size()), static_cast<Eigen::Index>(nf));
        vals_.resize(static_cast<Eigen::Index>(nf));
        interior_.resize(nf);
        std::size_t c = 0;
        std::vector<int> idx(axes_.size(), 0);
        for (std::size_t flat = 0; flat < values_.size(); ++flat) {
            if (std::isfinite(values_[flat])) {
                bool inter = true;
                for (std::size_t a = 0; a < axes_.size(); ++a) {
                    pts_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
                        axes_[a].coord(idx[a]);
                    inter = inter && idx[a] > 0 && idx[a] < axes_[a].m - 1;
                }
                vals_(static_cast<Eigen::Index>(c)) = values_[flat];
                interior_[c] = inter ? 1 : 0;
                ++c;
            }
            for (int a = static_cast<int>(axes_.size()) - 1; a >= 0; --a) {
                if (++idx[a] < axes_[a].m) break;
                idx[a] = 0;
            }
        }
    }

    int dim() const override { return static_cast<int>(axes_.size()); }
    TolClass tol_class() const override { return TolClass::Grid; }

    ExtReal eval(const Vec& x) const override {
        check_dim(*this, x);
        if (dim() == 1) return hull1d_.eval(x(0));
        if (hull_consistent_) {
            auto node = node_index(x);
            if (node) return ExtReal(values_[*node] == kInf ? kInf : values_[*node]);
        }
        return lower_hull_value(pts_, vals_, x);
    }

    ConvexFunction conjugate_impl() const override {
        // the exact discrete transform of the samples: max_i <s, x_i> - v_i,
        // flagged with which samples are interior to the box
        std::optional<std::pair<Vec, Vec>> sbox;
        if (dim() == 1 && hull1d_.xs().size() >= 2)
            sbox = std::make_pair(Vec::Constant(1, hull1d_.min_slope()),
                                  Vec::Constant(1, hull1d_.max_slope()));
        return ConvexFunction(std::make_shared<MaxAffineFn>(pts_, Vec(-vals_), interior_, sbox,
                                                            TolClass::Grid));
    }

    // Materialized per-axis transform onto a slope grid, with validity masks.
    ConvexFunction conjugate_onto(const std::vector<GridAxis>& out) const {
        auto llt = legendre_transform(axes_, values_, out);
        bool warn = false;
        for (auto f : llt.valid)
            if (!f) { warn = true; break; }
        return wrap(std::make_shared<GridFn>(out, std::move(llt.values), true, std::move(llt.valid), warn));
    }

    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const override {
        if (dim() == 1) {
            double beta = lin(0) - shift(0);
            auto [y, v] = hull1d_.min_quadratic(1.0, beta);
            double x = y - shift(0);
            return ProxResult{Vec::Constant(1, x), v + 0.5 * shift(0) * shift(0) - lin(0) * shift(0), true};
        }
        // node sweep then pattern-search polish on the hull
        auto obj = [&](const Vec& y) -> ExtReal {
            ExtReal fv = eval(y);
            if (!fv.is_finite()) return fv;
            Vec x = y - shift;
            return ExtReal(fv.value() + lin.dot(x) + 0.5 * x.squaredNorm());
        };
        Vec best_y;
        double best = kInf;
        std::vector<int> idx(axes_.size(), 0);
        for (std::size_t flat = 0; flat < values_.size(); ++flat) {
            if (std::isfinite(values_[flat])) {
                Vec y(dim());
                for (int a = 0; a < dim(); ++a) y(a) = axes_[a].coord(idx[a]);
                Vec x = y - shift;
                double v = values_[flat] + lin.dot(x) + 0.5 * x.squaredNorm();
                if (v < best) { best = v; best_y = y; }
            }
            for (int a = dim() - 1; a >= 0; --a) {
                if (++idx[a] < axes_[a].m) break;
                idx[a] = 0;
            }
        }
        if (!(best < kInf)) throw SolverFailure("grid prox: no finite sample");
        double step = 0.0;
        for (const auto& a : axes_) step = std::max(step, a.step());
        Vec y = best_y;
        for (int round = 0; round < 45 && step > 1e-11; ++round) {
            bool moved = false;
            for (int a = 0; a < dim(); ++a) {
                for (double sgn : {1.0, -1.0}) {
                    Vec cand = y;
                    cand(a) += sgn * step;
                    ExtReal v = obj(cand);
                    if (v.is_finite() && v.value() < best - 1e-15) {
                        best = v.value();
                        y = cand;
                        moved = true;
                    }
                }
            }
            if (!moved) step *= 0.5;
        }
        return ProxResult{y - shift, best, false};
    }

    ConvexFunction rescaled(const Vec& s) const override {
        std::vector<GridAxis> ax = axes_;
        for (std::size_t a = 0; a < ax.size(); ++a) {
            ax[a].lo /= s(static_cast<Eigen::Index>(a));
            ax[a].hi /= s(static_cast<Eigen::Index>(a));
        }
        return wrap(std::make_shared<GridFn>(std::move(ax), values_, hull_consistent_));
    }

    std::optional<ConvexFunction::GridData> grid_data() const override {
        return ConvexFunction::GridData{&axes_, &values_, valid_.empty() ? nullptr : &valid_};
    }

    std::optional<std::pair<Vec, Vec>> valid_slope_box() const override {
        if (valid_.empty()) return std::nullopt;
        Vec lo = Vec::Constant(dim(), kInf), hi = Vec::Constant(dim(), -kInf);
        std::vector<int> idx(axes_.size(), 0);
        for (std::size_t flat = 0; flat < values_.size(); ++flat) {
            if (valid_[flat]) {
                for (int a = 0; a < dim(); ++a) {
                    double c = axes_[a].coord(idx[a]);
                    lo(a) = std::min(lo(a), c);
                    hi(a) = std::max(hi(a), c);
                }
            }
            for (int a = dim() - 1; a >= 0; --a) {
                if (++idx[a] < axes_[a].m) break;
                idx[a] = 0;
            }
        }
        return std::make_pair(lo, hi);
    }
    bool boundary_warning() const override { return boundary_warn_; }
    bool provably_convex() const override { return hull_consistent_; }
    std::optional<ConvexFunction> conjugate_grid(const std::vector<GridAxis>& out) const override {
        return conjugate_onto(out);
    }
    bool valid_at(const Vec& x) const override {
        if (valid_.empty()) return true;
        auto node = node_index(x, 0.51);  // nearest node lookup
        return node ? valid_[*node] != 0 : false;
    }

private:
    // Flat index when x sits on a node (within frac*step per axis).
    std::optional<std::size_t> node_index(const Vec& x, double frac = 1e-7) const {
        std::size_t flat = 0;
        for (int a = 0; a < dim(); ++a) {
            const auto& ax = axes_[a];
            if (x(a) < ax.lo - 1e-12 || x(a) > ax.hi + 1e-12) return std::nullopt;
            int i = ax.nearest(x(a));
            if (std::abs(ax.coord(i) - x(a)) > frac * ax.step()) return std::nullopt;
            flat = flat * static_cast<std::size_t>(ax.m) + static_cast<std::size_t>(i);
        }
        return flat;
    }

    std::vector<GridAxis> axes_;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
    bool hull_consistent_;
    bool boundary_warn_;
    LowerHull1D hull1d_;
    Mat pts_;
    Vec vals_;
    std::vector<std::uint8_t> interior_;
};

}  // namespace
}  // namespace detail

// ------------------------------------------------------- public handle API

using detail::ConvexFunctionImpl;

int ConvexFunction::dim() const { return impl_->dim(); }
ExtReal ConvexFunction::eval(const Vec& x) const { return impl_->eval(x); }
TolClass ConvexFunction::tol_class() const { return impl_->tol_class(); }
ConvexFunction ConvexFunction::conjugate() const { return impl_->conjugate_cached(); }
bool ConvexFunction::has_closed_subdifferential() const { return impl_->has_subdiff(); }
DualBox ConvexFunction::subdifferential(const Vec& x) const { return impl_->subdiff(x); }
ProxResult ConvexFunction::prox_shifted(const Vec& shift, const Vec& lin) const {
    return impl_->prox_shifted(shift, lin);
}
ConvexFunction ConvexFunction::rescaled(const Vec& s) const {
    if (s.size() != dim() || (s.array() <= 0).any())
        throw std::invalid_argument("rescaled: scale must be positive, matching dim");
    return impl_->rescaled(s);
}
std::optional<QuadraticOnAffine> ConvexFunction::as_qoa() const { return impl_->as_qoa(); }
std::optional<ConvexFunction::GridData> ConvexFunction::grid_data() const { return impl_->grid_data(); }
std::optional<std::pair<Vec, Vec>> ConvexFunction::valid_slope_box() const {
    return impl_->valid_slope_box();
}
bool ConvexFunction::boundary_warning() const { return impl_->boundary_warning(); }
bool ConvexFunction::valid_at(const Vec& x) const { return impl_->valid_at(x); }
FnKind ConvexFunction::kind() const { return impl_->fn_kind(); }
ConvexFunction::QuadParts ConvexFunction::quad_parts() const { return impl_->quad_parts(); }
const Vec& ConvexFunction::abs_weights() const { return impl_->abs_weights(); }
std::pair<Vec, Vec> ConvexFunction::box_bounds() const { return impl_->box_bounds(); }
const std::vector<ConvexFunction>& ConvexFunction::pieces() const { return impl_->pieces(); }
AffModParts ConvexFunction::affmod_parts() const { return impl_->affmod_parts(); }
ConvexFunction::PolyhedralParts ConvexFunction::polyhedral_parts() const {
    return impl_->polyhedral_parts();
}
bool ConvexFunction::provably_convex() const { return impl_->provably_convex(); }
std::optional<ConvexFunction> ConvexFunction::conjugate_grid(const std::vector<GridAxis>& out) const {
    return impl_->conjugate_grid(out);
}

ConvexFunction ConvexFunction::quadratic(Mat A, Vec b, double c) {
    return ConvexFunction(std::make_shared<detail::QuadraticFn>(std::move(A), std::move(b), c));
}
ConvexFunction ConvexFunction::abs_norm(int n, double weight) {
    return abs_norm_weights(Vec::Constant(n, weight));
}
ConvexFunction ConvexFunction::abs_norm_weights(Vec w) {
    return ConvexFunction(std::make_shared<detail::AbsFn>(std::move(w)));
}
ConvexFunction ConvexFunction::box_indicator(Vec lo, Vec hi) {
    return ConvexFunction(std::make_shared<detail::BoxIndFn>(std::move(lo), std::move(hi)));
}
ConvexFunction ConvexFunction::box_support(Vec lo, Vec hi) {
    return ConvexFunction(std::make_shared<detail::BoxSupFn>(std::move(lo), std::move(hi)));
}
ConvexFunction ConvexFunction::separable_sum(std::vector<ConvexFunction> pieces) {
    return ConvexFunction(std::make_shared<detail::SepSumFn>(std::move(pieces)));
}
ConvexFunction ConvexFunction::affine_modified(ConvexFunction base, Vec shift, Vec lin, double add) {
    return ConvexFunction(
        std::make_shared<detail::AffModFn>(std::move(base), std::move(shift), std::move(lin), add));
}
ConvexFunction ConvexFunction::from_qoa(QuadraticOnAffine qoa) {
    if (qoa.E.rows() == 0 && !qoa.always_infinite && is_psd(qoa.P))
        return quadratic(qoa.P, qoa.q, qoa.r);
    return ConvexFunction(std::make_shared<detail::QoaFn>(std::move(qoa)));
}
ConvexFunction ConvexFunction::grid_sample(const ConvexFunction& f, double R, int m) {
    std::vector<GridAxis> axes(static_cast<std::size_t>(f.dim()), GridAxis{-R, R, m});
    std::vector<double> values(grid_size(axes));
    std::vector<int> idx(axes.size(), 0);
    Vec x(f.dim());
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        for (int a = 0; a < f.dim(); ++a) x(a) = axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]);
        values[flat] = f.eval(x).raw();
        for (int a = f.dim() - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return grid_raw(std::move(axes), std::move(values), true);
}
ConvexFunction ConvexFunction::grid_raw(std::vector<GridAxis> axes, std::vector<double> values,
                                        bool hull_consistent) {
    return ConvexFunction(
        std::make_shared<detail::GridFn>(std::move(axes), std::move(values), hull_consistent));
}
ConvexFunction ConvexFunction::max_affine(Mat G, Vec e) {
    return ConvexFunction(std::make_shared<detail::MaxAffineFn>(std::move(G), std::move(e)));
}
ConvexFunction ConvexFunction::hull_of_points(Mat Q, Vec v) {
    return ConvexFunction(std::make_shared<detail::HullFn>(std::move(Q), std::move(v)));
}
ConvexFunction ConvexFunction::permuted_blocks(std::vector<ConvexFunction> blocks,
                                               std::vector<std::vector<int>> coord_map) {
    return ConvexFunction(
        std::make_shared<detail::PermBlockFn>(std::move(blocks), std::move(coord_map)));
}

// ----------------------------------------------------------- free functions

ExtReal fenchel_young_gap(const ConvexFunction& f, const PrimalDualPoint& p) {
    ExtReal a = f.eval(p.x);
    ExtReal b = f.conjugate().eval(p.xstar);
    if (a.is_pos_inf() || b.is_pos_inf()) return ExtReal::pos_inf();
    return a + b - ExtReal(duality_product(p));
}

bool eps_subdiff_test(const ConvexFunction& f, const PrimalDualPoint& p, double eps) {
    if (eps < 0) throw PreconditionError("eps_subdiff_test: eps must be >= 0");
    ExtReal g = fenchel_young_gap(f, p);
    return g <= ExtReal(eps + tol::dual(f.tol_class()));
}

namespace {

// Sweep nodes of [-R, R]^n; callback gets the node.
template <typename F>
void sweep_box(int n, double R, int m, F&& fn) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    GridAxis ax{-R, R, m};
    Vec x(n);
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(m);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (int a = 0; a < n; ++a) x(a) = ax.coord(idx[static_cast<std::size_t>(a)]);
        fn(x);
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
}

}  // namespace

DualitySolveReport fenchel_duality(const ConvexFunction& f, const ConvexFunction& g,
                                   const FenchelOptions& opt) {
    if (f.dim() != g.dim()) throw std::invalid_argument("fenchel_duality: dimension mismatch");
    const int n = f.dim();
    const int m = n == 1 ? opt.nodes : std::min(opt.nodes, 201);
    const double R = opt.box_radius;
    const double step = 2 * R / (m - 1);

    // Qualification: a common finite node where one side is finite on all
    // axis neighbors too.
    bool qual = false;
    sweep_box(n, R, m, [&](const Vec& x) {
        if (qual) return;
        if (!f.eval(x).is_finite() || !g.eval(x).is_finite()) return;
        auto locally_bounded = [&](const ConvexFunction& h) {
            for (int a = 0; a < n; ++a) {
                Vec y = x;
                y(a) += step;
                if (!h.eval(y).is_finite()) return false;
                y(a) -= 2 * step;
                if (!h.eval(y).is_finite()) return false;
            }
            return true;
        };
        if (locally_bounded(f) || locally_bounded(g)) qual = true;
    });
    if (!qual)
        throw PreconditionError(
            "fenchel_duality: continuity qualification not verifiable on the sweep box");

    DualitySolveReport rep;
    rep.tol_class = combine(f.tol_class(), g.tol_class());

    auto fq = f.as_qoa();
    auto gq = g.as_qoa();
    if (fq && gq) {
        auto pm = fq->plus(*gq).minimize();
        if (!pm.value.is_finite()) throw SolverFailure("fenchel_duality: primal unbounded or infeasible");
        rep.primal_value = pm.value.value();
        // dual: maximize -f*(-s) - g*(s) == -min f*(-s) + g*(s)
        auto fstar = fq->conjugate();
        auto gstar = gq->conjugate();
        auto dm = fstar.rescaled(Vec::Constant(n, -1.0)).plus(gstar).minimize();
        if (!dm.value.is_finite() || !dm.argmin)
            throw SolverFailure("fenchel_duality: dual degenerate");
        rep.dual_value = -dm.value.value();
        rep.dual_maximizer = *dm.argmin;
        rep.gap = rep.primal_value - rep.dual_value;
        return rep;
    }

    // Sweep paths.
    ConvexFunction fstar = f.conjugate();
    ConvexFunction gstar = g.conjugate();
    double best_primal = kInf;
    Vec best_x;
    sweep_box(n, R, m, [&](const Vec& x) {
        ExtReal v = f.eval(x) + g.eval(x);
        if (v.is_finite() && v.value() < best_primal) {
            best_primal = v.value();
            best_x = x;
        }
    });
    if (!(best_primal < kInf)) throw SolverFailure("fenchel_duality: primal sweep found no finite value");
    if (n == 1) {
        // ternary polish inside the bracketing interval
        double lo = best_x(0) - step, hi = best_x(0) + step;
        for (int it = 0; it < 200; ++it) {
            double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            ExtReal v1 = f.eval(Vec::Constant(1, m1)) + g.eval(Vec::Constant(1, m1));
            ExtReal v2 = f.eval(Vec::Constant(1, m2)) + g.eval(Vec::Constant(1, m2));
            if (v1 <= v2) hi = m2; else lo = m1;
        }
        double xm = 0.5 * (lo + hi);
        ExtReal vm = f.eval(Vec::Constant(1, xm)) + g.eval(Vec::Constant(1, xm));
        if (vm.is_finite() && vm.value() < best_primal) best_primal = vm.value();
    }
    rep.primal_value = best_primal;

    double best_dual = -kInf;
    Vec best_s;
    sweep_box(n, R, m, [&](const Vec& s) {
        if (!fstar.impl().valid_at(-s) || !gstar.impl().valid_at(s)) return;
        ExtReal fs = fstar.eval(-s);
        ExtReal gs = gstar.eval(s);
        if (!fs.is_finite() || !gs.is_finite()) return;
        double v = -fs.value() - gs.value();
        if (v > best_dual) {
            best_dual = v;
            best_s = s;
        }
    });
    if (!(best_dual > -kInf)) throw SolverFailure("fenchel_duality: dual sweep found no finite value");
    if (n == 1) {
        double lo = best_s(0) - step, hi = best_s(0) + step;
        auto dval = [&](double s) -> ExtReal {
            Vec sv = Vec::Constant(1, s);
            ExtReal fs = fstar.eval(-sv), gs = gstar.eval(sv);
            if (!fs.is_finite() || !gs.is_finite()) return ExtReal::neg_inf();
            return ExtReal(-fs.value() - gs.value());
        };
        for (int it = 0; it < 200; ++it) {
            double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            if (dval(m1) >= dval(m2)) hi = m2; else lo = m1;
        }
        double sm = 0.5 * (lo + hi);
        ExtReal vm = dval(sm);
        if (vm.is_finite() && vm.value() > best_dual) {
            best_dual = vm.value();
            best_s = Vec::Constant(1, sm);
        }
    }
    rep.dual_value = best_dual;
    rep.dual_maximizer = best_s;
    rep.gap = rep.primal_value - rep.dual_value;
    return rep;
}

}  // namespace fitzbr
