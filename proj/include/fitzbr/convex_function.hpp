#ifndef FITZBR_CONVEX_FUNCTION_HPP
#define FITZBR_CONVEX_FUNCTION_HPP

#include <memory>
#include <optional>
#include <vector>

#include "fitzbr/extended_real.hpp"
#include "fitzbr/legendre.hpp"
#include "fitzbr/point.hpp"
#include "fitzbr/quadratic.hpp"
#include "fitzbr/tolerances.hpp"

namespace fitzbr {

// Coordinate box of dual vectors; entries may be +-inf. Used for set-valued
// subdifferentials.
struct DualBox {
    Vec lo, hi;
    bool empty = false;

    bool contains(const Vec& v, double tol) const;
    Vec clamp(const Vec& v) const;
    // The box is a single point.
    bool is_singleton(double tol = 1e-12) const;
};

struct ProxResult {
    Vec x;
    double value = 0.0;
    bool exact = true;
};

enum class FnKind {
    Quadratic,
    AbsNorm,
    BoxIndicator,
    BoxSupport,
    SeparableSum,
    AffineModified,
    Qoa,
    Grid,
    MaxAffine,
    HullOfPoints,
    PermutedBlocks,
};

namespace detail {
class ConvexFunctionImpl;
}

class ConvexFunction;
// Parts of an affine-modified wrapper: f(x) = base(x - shift) + lin.x + add.
struct AffModParts;

// Proper convex function on R^n. Value-semantic handle; all kinds are
// immutable after construction.
class ConvexFunction {
public:
    static ConvexFunction quadratic(Mat A, Vec b, double c);
    static ConvexFunction abs_norm(int n, double weight = 1.0);
    static ConvexFunction abs_norm_weights(Vec weights);
    static ConvexFunction box_indicator(Vec lo, Vec hi);
    static ConvexFunction box_support(Vec lo, Vec hi);
    static ConvexFunction separable_sum(std::vector<ConvexFunction> pieces);
    // f(x) = base(x - shift) + lin.x + add
    static ConvexFunction affine_modified(ConvexFunction base, Vec shift, Vec lin, double add);
    static ConvexFunction from_qoa(QuadraticOnAffine qoa);
    // Sample `f` on [-R, R]^n with m nodes per axis.
    static ConvexFunction grid_sample(const ConvexFunction& f, double R, int m);
    static ConvexFunction grid_raw(std::vector<GridAxis> axes, std::vector<double> values,
                                   bool hull_consistent);
    // f(x) = max_i <G.col(i), x> + e(i)   (polyhedral, conjugate = hull)
    static ConvexFunction max_affine(Mat G, Vec e);
    // Lower convex hull of the finite epigraph {(Q.col(i), v(i))}
    static ConvexFunction hull_of_points(Mat Q, Vec v);
    // f(x) = sum over blocks b of blocks[b](x[coord_map[b]]); the maps must
    // partition the coordinates.
    static ConvexFunction permuted_blocks(std::vector<ConvexFunction> blocks,
                                          std::vector<std::vector<int>> coord_map);

    int dim() const;
    ExtReal eval(const Vec& x) const;
    TolClass tol_class() const;
    FnKind kind() const;

    ConvexFunction conjugate() const;

    bool has_closed_subdifferential() const;
    DualBox subdifferential(const Vec& x) const;

    // Exact where possible: min_x f(x + shift) + lin.x + 0.5*|x|^2
    ProxResult prox_shifted(const Vec& shift, const Vec& lin) const;

    // g(x) = f(diag(scale) x), scale entrywise positive
    ConvexFunction rescaled(const Vec& scale) const;

    std::optional<QuadraticOnAffine> as_qoa() const;

    // Grid-backed functions expose their samples (CSV export, diagnostics).
    struct GridData {
        const std::vector<GridAxis>* axes;
        const std::vector<double>* values;
        const std::vector<std::uint8_t>* valid;  // null unless a conjugate carried validity
    };
    std::optional<GridData> grid_data() const;
    // Grid kinds: the per-axis discrete transform materialized onto `out`
    // slope axes, value+validity per node. Other kinds return nullopt.
    std::optional<ConvexFunction> conjugate_grid(const std::vector<GridAxis>& out) const;
    // For conjugates produced from grids: per-axis interval of slopes where
    // the conjugate is exact for the un-truncated function.
    std::optional<std::pair<Vec, Vec>> valid_slope_box() const;
    bool boundary_warning() const;  // set when evaluated/constructed outside that range
    // True when the conjugate of a grid kind is exact at this slope.
    bool valid_at(const Vec& x) const;

    // Typed accessors; throw std::logic_error when the kind does not match.
    struct QuadParts { Mat A; Vec b; double c; };
    QuadParts quad_parts() const;
    const Vec& abs_weights() const;
    std::pair<Vec, Vec> box_bounds() const;  // indicator and support kinds
    const std::vector<ConvexFunction>& pieces() const;
    AffModParts affmod_parts() const;
    struct PolyhedralParts { const Mat* points; const Vec* values; };
    PolyhedralParts polyhedral_parts() const;  // max_affine and hull kinds

    // Convexity known from construction; false only for indefinite quadratic
    // forms and raw nonconvex grids.
    bool provably_convex() const;

    const detail::ConvexFunctionImpl& impl() const { return *impl_; }
    explicit ConvexFunction(std::shared_ptr<const detail::ConvexFunctionImpl> impl)
        : impl_(std::move(impl)) {}

private:
    std::shared_ptr<const detail::ConvexFunctionImpl> impl_;
};

struct AffModParts {
    ConvexFunction base;
    Vec shift;
    Vec lin;
    double add = 0.0;
};

// Fenchel-Young gap f(x) + f*(x*) - <x, x*>; +inf when both values are +inf.
ExtReal fenchel_young_gap(const ConvexFunction& f, const PrimalDualPoint& p);

// x* in eps-subdifferential of f at x, i.e. gap <= eps (within the class
// tolerance).
bool eps_subdiff_test(const ConvexFunction& f, const PrimalDualPoint& p, double eps);

struct DualitySolveReport {
    double primal_value = 0.0;
    double dual_value = 0.0;
    Vec dual_maximizer;
    double gap = 0.0;
    TolClass tol_class = TolClass::Strict;
};

struct FenchelOptions {
    double box_radius = 8.0;  // sweep box for non-quadratic kinds
    int nodes = 8001;         // per axis (n = 1); reduced automatically for n = 2
};

// inf {f + g} = max {-f*(-s) - g*(s)}; throws PreconditionError when the
// continuity qualification cannot be verified.
DualitySolveReport fenchel_duality(const ConvexFunction& f, const ConvexFunction& g,
                                   const FenchelOptions& opt = {});

}  // namespace fitzbr

#endif
