#ifndef FITZBR_LEGENDRE_HPP
#define FITZBR_LEGENDRE_HPP

#include <cstdint>
#include <vector>

#include "fitzbr/extended_real.hpp"

namespace fitzbr {

// Uniform sample axis lo..hi with m nodes (m >= 2).
struct GridAxis {
    double lo = -1.0, hi = 1.0;
    int m = 2;
    double coord(int i) const { return lo + (hi - lo) * static_cast<double>(i) / (m - 1); }
    double step() const { return (hi - lo) / (m - 1); }
    // Nearest node and whether the query sits on it to within `tol`.
    int nearest(double x) const;
};

// Lower convex hull of 1-D samples; vertices kept in ascending x.
// Built from raw values (possibly +inf, which drops the sample).
class LowerHull1D {
public:
    LowerHull1D() = default;
    LowerHull1D(const std::vector<double>& xs, const std::vector<double>& vs);

    bool empty() const { return xs_.empty(); }
    ExtReal eval(double x) const;  // +inf outside the sampled span
    double min_x() const { return xs_.front(); }
    double max_x() const { return xs_.back(); }
    // Range of slopes attained strictly inside the hull; used to mark where a
    // sampled conjugate is exact for the underlying function.
    double min_slope() const;
    double max_slope() const;
    // Exact minimizer of hull(x) + 0.5*alpha*x^2 + beta*x over the span
    // (alpha > 0). Returns {argmin, value}.
    std::pair<double, double> min_quadratic(double alpha, double beta) const;

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& vs() const { return vs_; }

private:
    std::vector<double> xs_, vs_;
};

// One line of the discrete Legendre transform:
//   out(j) = max_i [ slope_j * x_i - w_i ]      (-inf when every w_i = +inf)
// `valid_out(j)` is set when some maximizing i is interior (0 < i < m-1) and
// carried a set `valid_in(i)` flag; that is the slope range for which the
// sampled conjugate agrees with the un-truncated one.
void conjugate_line(const std::vector<double>& x, const double* w, const std::uint8_t* valid_in,
                    const std::vector<double>& slopes, double* out, std::uint8_t* valid_out);

// Full discrete Legendre transform of a multi-d sample array (row-major,
// axis 0 outermost) onto the slope axes, by per-axis 1-D transforms.
struct LltResult {
    std::vector<double> values;       // may contain -inf when input was improper
    std::vector<std::uint8_t> valid;  // per output node
};
LltResult legendre_transform(const std::vector<GridAxis>& in_axes,
                             const std::vector<double>& in_values,
                             const std::vector<GridAxis>& out_axes);

inline std::size_t grid_size(const std::vector<GridAxis>& axes) {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.m);
    return n;
}

}  // namespace fitzbr

#endif
