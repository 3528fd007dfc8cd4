#include "fitzbr/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fitzbr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int GridAxis::nearest(double x) const {
    double t = (x - lo) / step();
    int i = static_cast<int>(std::lround(t));
    return std::clamp(i, 0, m - 1);
}

LowerHull1D::LowerHull1D(const std::vector<double>& xs, const std::vector<double>& vs) {
    if (xs.size() != vs.size()) throw std::invalid_argument("LowerHull1D: size mismatch");
    // Monotone chain over finite samples (x already ascending).
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(vs[i])) continue;
        double x = xs[i], v = vs[i];
        while (xs_.size() >= 2) {
            std::size_t k = xs_.size();
            // Keep the chain convex: drop the middle point when it lies on or
            // above the segment joining its neighbors.
            double cross = (xs_[k - 1] - xs_[k - 2]) * (v - vs_[k - 2]) -
                           (x - xs_[k - 2]) * (vs_[k - 1] - vs_[k - 2]);
            if (cross <= 1e-14 * (1.0 + std::abs(v))) {
                xs_.pop_back();
                vs_.pop_back();
            } else {
                break;
            }
        }
        if (!xs_.empty() && x <= xs_.back() + 1e-15) {
            // duplicate abscissa: keep the lower value
            if (v < vs_.back()) { xs_.back() = x; vs_.back() = v; }
            continue;
        }
        xs_.push_back(x);
        vs_.push_back(v);
    }
}

ExtReal LowerHull1D::eval(double x) const {
    if (xs_.empty()) return ExtReal::pos_inf();
    if (x < xs_.front() - 1e-12 || x > xs_.back() + 1e-12) return ExtReal::pos_inf();
    if (xs_.size() == 1) return ExtReal(vs_.front());
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t hi = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - xs_.begin(), 1), xs_.size() - 1);
    std::size_t lo = hi - 1;
    double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    t = std::clamp(t, 0.0, 1.0);
    return ExtReal(vs_[lo] + t * (vs_[hi] - vs_[lo]));
}

double LowerHull1D::min_slope() const {
    if (xs_.size() < 2) return 0.0;
    return (vs_[1] - vs_[0]) / (xs_[1] - xs_[0]);
}

double LowerHull1D::max_slope() const {
    if (xs_.size() < 2) return 0.0;
    std::size_t k = xs_.size();
    return (vs_[k - 1] - vs_[k - 2]) / (xs_[k - 1] - xs_[k - 2]);
}

std::pair<double, double> LowerHull1D::min_quadratic(double alpha, double beta) const {
    if (xs_.empty()) throw std::domain_error("LowerHull1D::min_quadratic: empty hull");
    double bx = xs_[0];
    double bv = vs_[0] + 0.5 * alpha * bx * bx + beta * bx;
    auto consider = [&](double x, double hull_v) {
        double v = hull_v + 0.5 * alpha * x * x + beta * x;
        if (v < bv) { bv = v; bx = x; }
    };
    for (std::size_t i = 0; i < xs_.size(); ++i) consider(xs_[i], vs_[i]);
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
        double slope = (vs_[i + 1] - vs_[i]) / (xs_[i + 1] - xs_[i]);
        double x = -(beta + slope) / alpha;  // stationarity on the segment
        if (x > xs_[i] && x < xs_[i + 1]) {
            double hull_v = vs_[i] + slope * (x - xs_[i]);
            consider(x, hull_v);
        }
    }
    return {bx, bv};
}

void conjugate_line(const std::vector<double>& x, const double* w, const std::uint8_t* valid_in,
                    const std::vector<double>& slopes, double* out, std::uint8_t* valid_out) {
    const int m = static_cast<int>(x.size());
    for (std::size_t j = 0; j < slopes.size(); ++j) {
        double s = slopes[j];
        double best = -kInf;
        for (int i = 0; i < m; ++i) {
            if (w[i] == kInf) continue;
            double t = s * x[i] - w[i];
            if (t > best) best = t;
        }
        out[j] = best;
        std::uint8_t ok = 0;
        if (best > -kInf) {
            double tie = 1e-12 * (1.0 + std::abs(best));
            for (int i = 0; i < m; ++i) {
                if (w[i] == kInf) continue;
                if (s * x[i] - w[i] >= best - tie && i > 0 && i < m - 1 &&
                    (valid_in == nullptr || valid_in[i])) {
                    ok = 1;
                    break;
                }
            }
        }
        valid_out[j] = ok;
    }
}

LltResult legendre_transform(const std::vector<GridAxis>& in_axes,
                             const std::vector<double>& in_values,
                             const std::vector<GridAxis>& out_axes) {
    const int D = static_cast<int>(in_axes.size());
    if (static_cast<int>(out_axes.size()) != D)
        throw std::invalid_argument("legendre_transform: axis count mismatch");
    if (in_values.size() != grid_size(in_axes))
        throw std::invalid_argument("legendre_transform: value count mismatch");

    std::vector<double> cur = in_values;
    std::vector<std::uint8_t> cur_valid(cur.size(), 1);
    std::vector<int> dims(D);
    for (int a = 0; a < D; ++a) dims[a] = in_axes[a].m;

    for (int a = 0; a < D; ++a) {
        // Stages after the first consume the negated previous output.
        if (a > 0)
            for (auto& v : cur) v = -v;  // -(-inf) = +inf: empty lines never win

        const int m_in = dims[a];
        const int m_out = out_axes[a].m;
        std::vector<double> xs(m_in), slopes(m_out);
        for (int i = 0; i < m_in; ++i) xs[i] = in_axes[a].coord(i);
        for (int j = 0; j < m_out; ++j) slopes[j] = out_axes[a].coord(j);

        std::size_t inner = 1;  // product of dims after axis a (contiguous stride)
        for (int b = a + 1; b < D; ++b) inner *= static_cast<std::size_t>(dims[b]);
        std::size_t outer = 1;  // product of dims before axis a
        for (int b = 0; b < a; ++b) outer *= static_cast<std::size_t>(dims[b]);

        std::vector<int> new_dims = dims;
        new_dims[a] = m_out;
        std::size_t new_total = outer * static_cast<std::size_t>(m_out) * inner;
        std::vector<double> next(new_total);
        std::vector<std::uint8_t> next_valid(new_total);

        std::vector<double> line(m_in), lout(m_out);
        std::vector<std::uint8_t> lvalid(m_in), lvout(m_out);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t q = 0; q < inner; ++q) {
                std::size_t base = o * static_cast<std::size_t>(m_in) * inner + q;
                for (int i = 0; i < m_in; ++i) {
                    line[i] = cur[base + static_cast<std::size_t>(i) * inner];
                    lvalid[i] = cur_valid[base + static_cast<std::size_t>(i) * inner];
                }
                conjugate_line(xs, line.data(), lvalid.data(), slopes, lout.data(), lvout.data());
                std::size_t nbase = o * static_cast<std::size_t>(m_out) * inner + q;
                for (int j = 0; j < m_out; ++j) {
                    next[nbase + static_cast<std::size_t>(j) * inner] = lout[j];
                    next_valid[nbase + static_cast<std::size_t>(j) * inner] = lvout[j];
                }
            }
        }
        cur = std::move(next);
        cur_valid = std::move(next_valid);
        dims = std::move(new_dims);
    }
    return {std::move(cur), std::move(cur_valid)};
}

}  // namespace fitzbr
