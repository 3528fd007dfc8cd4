#include "fitzbr/simplex.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fitzbr {

namespace {

constexpr double kPivTol = 1e-11;

// Dense tableau simplex with Bland's rule. T holds B^{-1}A, rhs >= 0.
struct Tableau {
    Mat T;                   // m x ncols
    Vec rhs;                 // m
    std::vector<int> basis;  // m, column index basic in each row
    int m, ncols;

    void pivot(int row, int col) {
        double piv = T(row, col);
        T.row(row) /= piv;
        rhs(row) /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            double f = T(i, col);
            if (f != 0.0) {
                T.row(i) -= f * T.row(row);
                rhs(i) -= f * rhs(row);
                if (rhs(i) < 0 && rhs(i) > -1e-13) rhs(i) = 0;
            }
        }
        basis[row] = col;
    }

    // Minimize cost over the current feasible basis; `allowed(j)` gates the
    // entering columns. Returns false on iteration-cap blowout.
    bool run(const Vec& cost, const std::vector<char>& allowed, int max_iter) {
        for (int iter = 0; iter < max_iter; ++iter) {
            // reduced costs: cost_j - cost_B . T_col(j)
            Vec cb(m);
            for (int i = 0; i < m; ++i) cb(i) = cost(basis[i]);
            int enter = -1;
            for (int j = 0; j < ncols; ++j) {
                if (!allowed[j]) continue;
                double rc = cost(j) - cb.dot(T.col(j));
                if (rc < -kPivTol) { enter = j; break; }  // Bland: smallest index
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > kPivTol) {
                    double ratio = rhs(i) / T(i, enter);
                    if (ratio < best - 1e-15 ||
                        (ratio < best + 1e-15 && (leave < 0 || basis[i] < basis[leave]))) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) throw std::runtime_error("simplex: unbounded (unexpected for hull LP)");
            pivot(leave, enter);
        }
        return false;
    }
};

}  // namespace

ExtReal lower_hull_value(const Mat& points, const Vec& values, const Vec& query,
                         double feas_tol) {
    const int d = static_cast<int>(points.rows());
    const int N = static_cast<int>(points.cols());
    if (N == 0) return ExtReal::pos_inf();
    if (values.size() != N || query.size() != d)
        throw std::invalid_argument("lower_hull_value: shape mismatch");

    const int m = d + 1;
    Tableau tb;
    tb.m = m;
    tb.ncols = N + m;
    tb.T.setZero(m, tb.ncols);
    tb.rhs.resize(m);
    // Constraint rows: [points; 1^T] lambda = [query; 1]
    for (int i = 0; i < d; ++i) {
        tb.T.row(i).head(N) = points.row(i);
        tb.rhs(i) = query(i);
    }
    tb.T.row(d).head(N).setOnes();
    tb.rhs(d) = 1.0;
    // Flip rows so rhs >= 0; artificial identity block.
    for (int i = 0; i < m; ++i) {
        if (tb.rhs(i) < 0) {
            tb.T.row(i) = -tb.T.row(i);
            tb.rhs(i) = -tb.rhs(i);
        }
        tb.T(i, N + i) = 1.0;
    }
    tb.basis.resize(m);
    for (int i = 0; i < m; ++i) tb.basis[i] = N + i;

    // Phase 1: minimize the artificial total.
    Vec cost1 = Vec::Zero(tb.ncols);
    cost1.tail(m).setOnes();
    std::vector<char> all(tb.ncols, 1);
    if (!tb.run(cost1, all, 20000)) throw std::runtime_error("simplex: phase-1 iteration cap");
    double art = 0.0;
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] >= N) art += tb.rhs(i);
    if (art > feas_tol) return ExtReal::pos_inf();

    // Drive zero-level artificials out of the basis; drop redundant rows by
    // leaving them (their level is ~0 and artificials are barred below).
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] >= N) {
            for (int j = 0; j < N; ++j) {
                if (std::abs(tb.T(i, j)) > 1e-9) { tb.pivot(i, j); break; }
            }
        }
    }

    // Phase 2 on the true cost; artificial columns barred.
    Vec cost2 = Vec::Zero(tb.ncols);
    cost2.head(N) = values;
    std::vector<char> real_only(tb.ncols, 1);
    for (int j = N; j < tb.ncols; ++j) real_only[j] = 0;
    if (!tb.run(cost2, real_only, 20000)) throw std::runtime_error("simplex: phase-2 iteration cap");

    double obj = 0.0;
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] < N) obj += values(tb.basis[i]) * tb.rhs(i);
    return ExtReal(obj);
}

SimplexQpResult simplex_qp(const Mat& G, const Vec& c) {
    const int N = static_cast<int>(G.cols());
    if (N == 0) throw std::invalid_argument("simplex_qp: empty problem");
    const double tol = 1e-12;

    auto objective = [&](const Vec& lam) {
        return 0.5 * (G * lam).squaredNorm() + c.dot(lam);
    };

    // Start from the best single vertex.
    int start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
        double v = 0.5 * G.col(i).squaredNorm() + c(i);
        if (v < best) { best = v; start = i; }
    }
    std::vector<int> support{start};
    std::vector<char> in_support(static_cast<std::size_t>(N), 0);
    in_support[static_cast<std::size_t>(start)] = 1;
    Vec lambda = Vec::Zero(N);
    lambda(start) = 1.0;

    SimplexQpResult res;
    const int max_major = 40 * N + 400;
    for (int iter = 0; iter < max_major; ++iter) {
        res.iterations = iter;
        const int k = static_cast<int>(support.size());
        // Solve the subproblem restricted to the support and the affine
        // constraint sum = 1, reduced onto the zero-sum subspace. H may be
        // rank deficient; an inconsistent linear part means the subproblem
        // is unbounded and yields a descent ray instead.
        Mat Gs(G.rows(), k);
        for (int a = 0; a < k; ++a) Gs.col(a) = G.col(support[a]);
        Mat Hs = Gs.transpose() * Gs;
        Vec cs(k);
        for (int a = 0; a < k; ++a) cs(a) = c(support[a]);

        Vec sol(k);
        bool ray = false;
        Vec ray_dir;
        if (k == 1) {
            sol(0) = 1.0;
        } else {
            Mat ones_row = Mat::Ones(1, k);
            Eigen::JacobiSVD<Mat> svd1(ones_row, Eigen::ComputeFullV);
            Mat Bz = svd1.matrixV().rightCols(k - 1);  // orthonormal zero-sum basis
            Vec lam0 = Vec::Constant(k, 1.0 / k);
            Mat Ht = Bz.transpose() * Hs * Bz;
            Ht = 0.5 * (Ht + Ht.transpose()).eval();
            Vec ct = Bz.transpose() * (Hs * lam0 + cs);
            Eigen::SelfAdjointEigenSolver<Mat> es(Ht);
            double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
            double etol = 1e-11 * scale;
            Vec t = Vec::Zero(k - 1);
            Vec tnull = Vec::Zero(k - 1);
            for (int i = 0; i < k - 1; ++i) {
                double proj = es.eigenvectors().col(i).dot(ct);
                if (es.eigenvalues()(i) > etol)
                    t -= es.eigenvectors().col(i) * (proj / es.eigenvalues()(i));
                else if (std::abs(proj) > 1e-12 * (1.0 + ct.norm()))
                    tnull -= es.eigenvectors().col(i) * proj;
            }
            if (tnull.norm() > 0) {
                ray = true;
                ray_dir = Bz * tnull;  // zero-sum descent direction, H-null
            } else {
                sol = lam0 + Bz * t;
            }
        }

        if (ray) {
            // walk the descent ray from the current point to the first
            // vanishing coordinate
            double alpha = std::numeric_limits<double>::infinity();
            int blocker = -1;
            for (int a = 0; a < k; ++a) {
                if (ray_dir(a) < -1e-14) {
                    double step = -lambda(support[a]) / ray_dir(a);
                    if (step < alpha - 1e-15 ||
                        (step < alpha + 1e-15 && (blocker < 0 || support[a] < support[blocker]))) {
                        alpha = step;
                        blocker = a;
                    }
                }
            }
            if (blocker < 0) throw std::runtime_error("simplex_qp: unbounded ray on the simplex");
            for (int a = 0; a < k; ++a)
                lambda(support[a]) = std::max(lambda(support[a]) + alpha * ray_dir(a), 0.0);
            int j = support[blocker];
            lambda(j) = 0.0;
            in_support[static_cast<std::size_t>(j)] = 0;
            support.erase(support.begin() + blocker);
            continue;
        }

        Vec cand = Vec::Zero(N);
        for (int a = 0; a < k; ++a) cand(support[a]) = sol(a);

        bool interior = true;
        for (int a = 0; a < k; ++a)
            if (sol(a) < -1e-11) { interior = false; break; }

        if (!interior) {
            // Step from lambda toward cand until a support coordinate hits 0.
            double alpha = 1.0;
            int blocker = -1;
            for (int a = 0; a < k; ++a) {
                int j = support[a];
                double delta = cand(j) - lambda(j);
                if (delta < -tol) {
                    double step = -lambda(j) / delta;
                    if (step < alpha - 1e-15 ||
                        (step < alpha + 1e-15 && (blocker < 0 || j < support[blocker]))) {
                        alpha = std::min(step, 1.0);
                        blocker = a;
                    }
                }
            }
            lambda += alpha * (cand - lambda);
            lambda = lambda.cwiseMax(0.0);
            if (blocker >= 0) {
                int j = support[blocker];
                lambda(j) = 0.0;
                in_support[static_cast<std::size_t>(j)] = 0;
                support.erase(support.begin() + blocker);
            }
            continue;
        }

        lambda = cand;
        for (int a = 0; a < k; ++a) lambda(support[a]) = std::max(lambda(support[a]), 0.0);
        // Optimality over the full simplex: the gradient on the support sits
        // at a common level; any outside coordinate below it improves.
        Vec grad = G.transpose() * (G * lambda) + c;
        double lvl = 0.0;
        for (int a = 0; a < k; ++a) lvl += grad(support[a]);
        lvl /= k;
        int enter = -1;
        for (int j = 0; j < N; ++j) {
            if (in_support[static_cast<std::size_t>(j)]) continue;
            if (grad(j) < lvl - 1e-11) { enter = j; break; }
        }
        if (enter < 0) {
            res.lambda = lambda;
            res.value = objective(lambda);
            return res;
        }
        support.push_back(enter);
        in_support[static_cast<std::size_t>(enter)] = 1;
        std::sort(support.begin(), support.end());
    }
    // Cap reached: return the best feasible point found (still a valid upper
    // bound; callers gate on the achieved value).
    res.lambda = lambda;
    res.value = objective(lambda);
    return res;
}

}  // namespace fitzbr
