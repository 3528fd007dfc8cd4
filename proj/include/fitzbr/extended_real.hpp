#ifndef FITZBR_EXTENDED_REAL_HPP
#define FITZBR_EXTENDED_REAL_HPP

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fitzbr {

// Extended real value in [-inf, +inf]. Addition saturates at infinity;
// combining opposite infinities is a construction error, not a NaN.
class ExtReal {
public:
    ExtReal() : v_(0.0) {}
    ExtReal(double v) : v_(v) {
        if (std::isnan(v)) throw std::domain_error("ExtReal: NaN is not an extended real");
    }

    static ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
    static ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

    bool is_finite() const { return std::isfinite(v_); }
    bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
    bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

    // Finite payload; throws on infinities.
    double value() const {
        if (!is_finite()) throw std::domain_error("ExtReal: value() on infinite");
        return v_;
    }
    // Raw double including +-inf, for callers that handle infinities themselves.
    double raw() const { return v_; }

    ExtReal operator-() const { return ExtReal(-v_, 0); }

    ExtReal operator+(ExtReal o) const {
        if (is_pos_inf() && o.is_neg_inf()) throw std::domain_error("ExtReal: inf + (-inf)");
        if (is_neg_inf() && o.is_pos_inf()) throw std::domain_error("ExtReal: (-inf) + inf");
        if (!is_finite()) return *this;
        if (!o.is_finite()) return o;
        return ExtReal(v_ + o.v_, 0);
    }
    ExtReal operator-(ExtReal o) const { return *this + (-o); }
    ExtReal& operator+=(ExtReal o) { *this = *this + o; return *this; }

    // Scaling by a finite positive factor keeps infinities in place.
    ExtReal scaled(double a) const {
        if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("ExtReal: scale must be finite positive");
        if (!is_finite()) return *this;
        return ExtReal(v_ * a, 0);
    }

    bool operator<(ExtReal o) const { return v_ < o.v_; }
    bool operator>(ExtReal o) const { return v_ > o.v_; }
    bool operator<=(ExtReal o) const { return v_ <= o.v_; }
    bool operator>=(ExtReal o) const { return v_ >= o.v_; }
    bool operator==(ExtReal o) const { return v_ == o.v_; }
    bool operator!=(ExtReal o) const { return v_ != o.v_; }

    std::string str() const {
        if (is_pos_inf()) return "inf";
        if (is_neg_inf()) return "-inf";
        return std::to_string(v_);
    }

private:
    ExtReal(double v, int) : v_(v) {}  // unchecked
    double v_;
};

inline ExtReal min(ExtReal a, ExtReal b) { return a <= b ? a : b; }
inline ExtReal max(ExtReal a, ExtReal b) { return a >= b ? a : b; }

inline std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << x.str(); }

}  // namespace fitzbr

#endif
