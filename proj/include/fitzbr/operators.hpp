#ifndef FITZBR_OPERATORS_HPP
#define FITZBR_OPERATORS_HPP

#include <memory>
#include <optional>
#include <vector>

#include "fitzbr/convex_function.hpp"
#include "fitzbr/point.hpp"

namespace fitzbr {

enum class OperatorKind { Affine, Rotation2d, Subdifferential, SampledGraph };

// Point-to-set value of an operator: a finite list of dual vectors, a
// coordinate box, or both (either part may be absent).
struct DualSet {
    std::vector<Vec> points;
    std::optional<DualBox> box;

    bool empty() const {
        return points.empty() && (!box || box->empty);
    }
    bool contains(const Vec& v, double tol) const;
};

// Monotone operator from the catalogue: affine maps with PSD symmetric part,
// the planar rotation, subdifferentials of closed-form convex functions, and
// finite sampled graphs.
class MonotoneOperator {
public:
    static MonotoneOperator affine(Mat A, Vec b);
    static MonotoneOperator identity(int n);
    static MonotoneOperator rotation2d();
    static MonotoneOperator subdifferential(ConvexFunction f);
    static MonotoneOperator sampled_graph(std::vector<PrimalDualPoint> pts);

    int dim() const { return n_; }
    OperatorKind kind() const { return kind_; }

    DualSet eval_at(const Vec& x) const;

    // Finite sample of the graph inside the primal box [-R, R]^n with m
    // nodes per parameter sweep.
    std::vector<PrimalDualPoint> sample_graph(double R, int m) const;

    // Nearest graph point (closed form for analytic kinds, nearest stored
    // sample otherwise).
    PrimalDualPoint project_to_graph(const PrimalDualPoint& p) const;

    // kind accessors
    const Mat& affine_A() const { return A_; }
    const Vec& affine_b() const { return b_; }
    const ConvexFunction& potential() const { return *f_; }
    const std::vector<PrimalDualPoint>& graph_points() const { return graph_; }

private:
    MonotoneOperator(OperatorKind k, int n) : kind_(k), n_(n) {}
    OperatorKind kind_;
    int n_;
    Mat A_;
    Vec b_;
    std::optional<ConvexFunction> f_;
    std::vector<PrimalDualPoint> graph_;
};

// The i-th 1-D factor of a separable catalogue potential (separable sums,
// abs norms, box indicators and affine modifications of those).
ConvexFunction potential_piece(const ConvexFunction& f, int i);

struct MonotonicityReport {
    bool ok = true;
    double worst_product = 0.0;
    std::optional<std::pair<PrimalDualPoint, PrimalDualPoint>> witness;
};

// Pairwise test of <x - y, x* - y*> >= -tol over a finite graph.
MonotonicityReport monotonicity_check(const std::vector<PrimalDualPoint>& graph,
                                      double tol = tol::mono_sampled);

struct EnlargementReport {
    ExtReal inf_value = ExtReal(0.0);  // may be -inf
    bool member = false;
};

// inf over the graph of <x - y, x* - y*> and membership in the
// eps-enlargement (inf >= -eps up to the monotonicity tolerance).
EnlargementReport eps_enlargement_test(const MonotoneOperator& T, const PrimalDualPoint& p,
                                       double eps);

}  // namespace fitzbr

#endif
