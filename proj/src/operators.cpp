#include "fitzbr/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fitzbr/errors.hpp"

namespace fitzbr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Mat rotation_matrix() {
    Mat J(2, 2);
    J << 0, -1, 1, 0;
    return J;
}

// (x, xstar) pairs of a 1-D graph branch sweep.
using Branch = std::vector<std::pair<double, double>>;

// Exact sweep of the graph of a 1-D catalogue subdifferential.
Branch sweep_1d_graph(const ConvexFunction& f, double R, int m) {
    Branch out;
    GridAxis ax{-R, R, m};
    switch (f.kind()) {
        case FnKind::Quadratic: {
            auto qp = f.quad_parts();
            for (int k = 0; k < m; ++k) {
                double t = ax.coord(k);
                out.emplace_back(t, qp.A(0, 0) * t + qp.b(0));
            }
            return out;
        }
        case FnKind::AbsNorm: {
            double w = f.abs_weights()(0);
            for (int k = 0; k < m; ++k) {
                double t = ax.coord(k);
                if (t < 0) out.emplace_back(t, -w);
                else if (t > 0) out.emplace_back(t, w);
            }
            for (int k = 0; k < m; ++k) out.emplace_back(0.0, -w + 2.0 * w * k / (m - 1));
            return out;
        }
        case FnKind::BoxIndicator: {
            auto [lo, hi] = f.box_bounds();
            double l = lo(0), u = hi(0);
            for (int k = 0; k < m; ++k) {
                double t = ax.coord(k);
                if (t >= l && t <= u) out.emplace_back(t, 0.0);
            }
            for (int k = 0; k < m; ++k) {
                double s = ax.coord(k);
                if (s < 0 && l >= -R) out.emplace_back(l, s);
                if (s > 0 && u <= R) out.emplace_back(u, s);
            }
            out.emplace_back(l, 0.0);
            out.emplace_back(u, 0.0);
            return out;
        }
        case FnKind::AffineModified: {
            auto parts = f.affmod_parts();
            Branch base = sweep_1d_graph(parts.base, R, m);
            for (auto& [t, s] : base) {
                t += parts.shift(0);
                s += parts.lin(0);
            }
            return base;
        }
        default:
            throw std::logic_error("sweep_1d_graph: unsupported piece kind");
    }
}

// Nearest point of the graph of a 1-D catalogue subdifferential.
std::pair<double, double> project_1d_graph(const ConvexFunction& f, double x, double xs) {
    auto dist2 = [&](double t, double s) { return (t - x) * (t - x) + (s - xs) * (s - xs); };
    switch (f.kind()) {
        case FnKind::Quadratic: {
            auto qp = f.quad_parts();
            double a = qp.A(0, 0), b = qp.b(0);
            double t = (x + a * (xs - b)) / (1.0 + a * a);
            return {t, a * t + b};
        }
        case FnKind::AbsNorm: {
            double w = f.abs_weights()(0);
            std::pair<double, double> cands[3] = {
                {std::max(x, 0.0), w},                       // {t >= 0} x {w}
                {std::min(x, 0.0), -w},                      // {t <= 0} x {-w}
                {0.0, std::clamp(xs, -w, w)},                // {0} x [-w, w]
            };
            auto best = cands[0];
            for (auto c : cands)
                if (dist2(c.first, c.second) < dist2(best.first, best.second)) best = c;
            return best;
        }
        case FnKind::BoxIndicator: {
            auto [lo, hi] = f.box_bounds();
            double l = lo(0), u = hi(0);
            std::pair<double, double> cands[3] = {
                {l, std::min(xs, 0.0)},                      // {l} x (-inf, 0]
                {u, std::max(xs, 0.0)},                      // {u} x [0, inf)
                {std::clamp(x, l, u), 0.0},                  // [l, u] x {0}
            };
            auto best = cands[0];
            for (auto c : cands)
                if (dist2(c.first, c.second) < dist2(best.first, best.second)) best = c;
            return best;
        }
        case FnKind::AffineModified: {
            auto parts = f.affmod_parts();
            auto [t, s] = project_1d_graph(parts.base, x - parts.shift(0), xs - parts.lin(0));
            return {t + parts.shift(0), s + parts.lin(0)};
        }
        default:
            throw std::logic_error("project_1d_graph: unsupported piece kind");
    }
}

PrimalDualPoint project_affine(const Mat& A, const Vec& b, const PrimalDualPoint& p) {
    const auto n = p.x.size();
    Mat M = Mat::Identity(n, n) + A.transpose() * A;
    Vec y = M.ldlt().solve(p.x + A.transpose() * (p.xstar - b));
    return PrimalDualPoint(y, A * y + b);
}

}  // namespace

ConvexFunction potential_piece(const ConvexFunction& f, int i) {
    switch (f.kind()) {
        case FnKind::SeparableSum:
            return f.pieces()[static_cast<std::size_t>(i)];
        case FnKind::AbsNorm:
            return ConvexFunction::abs_norm(1, f.abs_weights()(i));
        case FnKind::BoxIndicator: {
            auto [lo, hi] = f.box_bounds();
            return ConvexFunction::box_indicator(lo.segment(i, 1), hi.segment(i, 1));
        }
        case FnKind::Quadratic:
            if (f.dim() == 1) return f;
            break;
        case FnKind::AffineModified: {
            auto parts = f.affmod_parts();
            return ConvexFunction::affine_modified(potential_piece(parts.base, i),
                                                   parts.shift.segment(i, 1),
                                                   parts.lin.segment(i, 1), 0.0);
        }
        default:
            break;
    }
    if (f.dim() == 1) return f;
    throw std::logic_error("potential_piece: potential does not factor per coordinate");
}

bool DualSet::contains(const Vec& v, double tol) const {
    for (const auto& p : points)
        if ((p - v).lpNorm<Eigen::Infinity>() <= tol) return true;
    if (box && box->contains(v, tol)) return true;
    return false;
}

MonotoneOperator MonotoneOperator::affine(Mat A, Vec b) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw std::invalid_argument("affine operator: shape mismatch");
    if (!is_psd(0.5 * (A + A.transpose())))
        throw std::invalid_argument("affine operator: A + A^T must be positive semidefinite");
    MonotoneOperator t(OperatorKind::Affine, static_cast<int>(b.size()));
    t.A_ = std::move(A);
    t.b_ = std::move(b);
    return t;
}

MonotoneOperator MonotoneOperator::identity(int n) {
    return affine(Mat::Identity(n, n), Vec::Zero(n));
}

MonotoneOperator MonotoneOperator::rotation2d() {
    MonotoneOperator t(OperatorKind::Rotation2d, 2);
    t.A_ = rotation_matrix();
    t.b_ = Vec::Zero(2);
    return t;
}

MonotoneOperator MonotoneOperator::subdifferential(ConvexFunction f) {
    if (!f.has_closed_subdifferential())
        throw std::invalid_argument(
            "subdifferential operator: potential must have a closed-form subdifferential");
    MonotoneOperator t(OperatorKind::Subdifferential, f.dim());
    t.f_ = std::move(f);
    return t;
}

MonotoneOperator MonotoneOperator::sampled_graph(std::vector<PrimalDualPoint> pts) {
    if (pts.empty()) throw std::invalid_argument("sampled_graph: empty graph");
    const Eigen::Index n = pts.front().dim();
    for (const auto& p : pts)
        if (p.dim() != n) throw std::invalid_argument("sampled_graph: mixed dimensions");
    auto rep = monotonicity_check(pts, tol::mono_sampled);
    if (!rep.ok) throw std::invalid_argument("sampled_graph: graph fails the monotonicity check");
    MonotoneOperator t(OperatorKind::SampledGraph, static_cast<int>(n));
    t.graph_ = std::move(pts);
    return t;
}

DualSet MonotoneOperator::eval_at(const Vec& x) const {
    if (x.size() != n_) throw std::invalid_argument("operator eval: dimension mismatch");
    DualSet out;
    switch (kind_) {
        case OperatorKind::Affine:
        case OperatorKind::Rotation2d:
            out.points.push_back(A_ * x + b_);
            break;
        case OperatorKind::Subdifferential: {
            DualBox b = f_->subdifferential(x);
            if (!b.empty) out.box = b;
            break;
        }
        case OperatorKind::SampledGraph:
            for (const auto& g : graph_)
                if ((g.x - x).lpNorm<Eigen::Infinity>() <= tol::graph_x) out.points.push_back(g.xstar);
            break;
    }
    return out;
}

std::vector<PrimalDualPoint> MonotoneOperator::sample_graph(double R, int m) const {
    if (kind_ == OperatorKind::SampledGraph) return graph_;
    std::vector<PrimalDualPoint> out;
    if (kind_ == OperatorKind::Affine || kind_ == OperatorKind::Rotation2d) {
        GridAxis ax{-R, R, m};
        std::vector<int> idx(static_cast<std::size_t>(n_), 0);
        std::size_t total = 1;
        for (int a = 0; a < n_; ++a) total *= static_cast<std::size_t>(m);
        Vec x(n_);
        for (std::size_t flat = 0; flat < total; ++flat) {
            for (int a = 0; a < n_; ++a) x(a) = ax.coord(idx[static_cast<std::size_t>(a)]);
            out.emplace_back(x, A_ * x + b_);
            for (int a = n_ - 1; a >= 0; --a) {
                if (++idx[static_cast<std::size_t>(a)] < m) break;
                idx[static_cast<std::size_t>(a)] = 0;
            }
        }
        return out;
    }
    // Subdifferential kind: smooth quadratic potentials go through the
    // affine sweep, separable kinds through per-coordinate branch sweeps.
    const ConvexFunction& f = *f_;
    if (auto q = f.as_qoa(); q && q->E.rows() == 0)
        return MonotoneOperator::affine(q->P, q->q).sample_graph(R, m);
    std::vector<Branch> per_coord;
    for (int i = 0; i < n_; ++i) per_coord.push_back(sweep_1d_graph(potential_piece(f, i), R, m));
    std::vector<std::size_t> idx(per_coord.size(), 0);
    while (true) {
        Vec x(n_), xs(n_);
        for (int i = 0; i < n_; ++i) {
            auto [t, s] = per_coord[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
            x(i) = t;
            xs(i) = s;
        }
        out.emplace_back(x, xs);
        int a = n_ - 1;
        for (; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < per_coord[static_cast<std::size_t>(a)].size()) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
        if (a < 0) break;
    }
    return out;
}

PrimalDualPoint MonotoneOperator::project_to_graph(const PrimalDualPoint& p) const {
    if (p.dim() != n_) throw std::invalid_argument("project_to_graph: dimension mismatch");
    switch (kind_) {
        case OperatorKind::Affine:
        case OperatorKind::Rotation2d:
            return project_affine(A_, b_, p);
        case OperatorKind::Subdifferential: {
            const ConvexFunction& f = *f_;
            if (auto q = f.as_qoa(); q && q->E.rows() == 0) return project_affine(q->P, q->q, p);
            Vec x = p.x, xs = p.xstar;
            for (int i = 0; i < n_; ++i) {
                auto [t, s] = project_1d_graph(potential_piece(f, i), p.x(i), p.xstar(i));
                x(i) = t;
                xs(i) = s;
            }
            return PrimalDualPoint(x, xs);
        }
        case OperatorKind::SampledGraph: {
            double best = kInf;
            const PrimalDualPoint* bp = &graph_.front();
            for (const auto& g : graph_) {
                double d = (g.x - p.x).squaredNorm() + (g.xstar - p.xstar).squaredNorm();
                if (d < best) {
                    best = d;
                    bp = &g;
                }
            }
            return *bp;
        }
    }
    throw std::logic_error("unreachable");
}

MonotonicityReport monotonicity_check(const std::vector<PrimalDualPoint>& graph, double tol) {
    if (graph.empty()) throw std::invalid_argument("monotonicity_check: empty graph");
    MonotonicityReport rep;
    rep.worst_product = kInf;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            double prod = (graph[i].x - graph[j].x).dot(graph[i].xstar - graph[j].xstar);
            if (prod < rep.worst_product) rep.worst_product = prod;
            if (prod < -tol && rep.ok) {
                rep.ok = false;
                rep.witness = std::make_pair(graph[i], graph[j]);
            }
        }
    }
    if (graph.size() == 1) rep.worst_product = 0.0;
    return rep;
}

// eps_enlargement_test is implemented in bifunction.cpp: the infimum equals
// pi(p) - phi_T(p), evaluated through the representation machinery.

}  // namespace fitzbr
