#pragma once

#include <cmath>
#include <limits>

namespace treexp {

/**
 * A point of the extended real line [-inf, +inf].
 *
 * NaN is never stored; every operation totalizes. The conventions are
 * pessimistic where the arithmetic is genuinely undefined:
 *
 *   (+inf) - (+inf) = -inf          (and symmetrically (+inf) + (-inf) = -inf)
 *   x / 0  = +inf, -inf, -inf       for x > 0, x < 0, x = 0
 *   inf / inf = -inf
 *   0 * (+-inf) = 0
 *   pow results that would be NaN collapse to -inf
 *
 * Expectations are computed as E[xi+] - E[xi-] with the value -inf when both
 * parts are infinite; see expectation() in measure.hpp.
 */
struct XReal {
    double v = 0.0;

    constexpr XReal() = default;
    constexpr XReal(double x) : v(x) {}  // NOLINT(google-explicit-constructor)

    static constexpr XReal pos_inf() { return XReal(std::numeric_limits<double>::infinity()); }
    static constexpr XReal neg_inf() { return XReal(-std::numeric_limits<double>::infinity()); }

    bool finite() const { return std::isfinite(v); }
    bool is_pos_inf() const { return v == std::numeric_limits<double>::infinity(); }
    bool is_neg_inf() const { return v == -std::numeric_limits<double>::infinity(); }

    friend constexpr bool operator==(XReal a, XReal b) { return a.v == b.v; }
    friend constexpr bool operator!=(XReal a, XReal b) { return a.v != b.v; }
    friend constexpr bool operator<(XReal a, XReal b) { return a.v < b.v; }
    friend constexpr bool operator<=(XReal a, XReal b) { return a.v <= b.v; }
    friend constexpr bool operator>(XReal a, XReal b) { return a.v > b.v; }
    friend constexpr bool operator>=(XReal a, XReal b) { return a.v >= b.v; }
};

inline XReal xneg(XReal a) { return XReal(-a.v); }

inline XReal xadd(XReal a, XReal b) {
    if (a.is_neg_inf() || b.is_neg_inf()) return XReal::neg_inf();
    if (a.is_pos_inf() || b.is_pos_inf()) return XReal::pos_inf();
    return XReal(a.v + b.v);
}

inline XReal xsub(XReal a, XReal b) { return xadd(a, xneg(b)); }

inline XReal xmul(XReal a, XReal b) {
    if (a.v == 0.0 || b.v == 0.0) return XReal(0.0);
    if (!a.finite() || !b.finite()) {
        const bool pos = (a.v > 0) == (b.v > 0);
        return pos ? XReal::pos_inf() : XReal::neg_inf();
    }
    return XReal(a.v * b.v);
}

inline XReal xdiv(XReal a, XReal b) {
    if (b.v == 0.0) {
        if (a.v > 0.0) return XReal::pos_inf();
        if (a.v < 0.0) return XReal::neg_inf();
        return XReal::neg_inf();  // 0/0, same convention as inf - inf
    }
    if (!b.finite()) {
        if (!a.finite()) return XReal::neg_inf();  // inf/inf
        return XReal(0.0);
    }
    if (!a.finite()) return (a.v > 0) == (b.v > 0) ? XReal::pos_inf() : XReal::neg_inf();
    return XReal(a.v / b.v);
}

inline XReal xpow(XReal a, XReal b) {
    const double r = std::pow(a.v, b.v);
    if (std::isnan(r)) return XReal::neg_inf();
    return XReal(r);
}

inline XReal xmax(XReal a, XReal b) { return a.v >= b.v ? a : b; }
inline XReal xmin(XReal a, XReal b) { return a.v <= b.v ? a : b; }
inline XReal xabs(XReal a) { return XReal(std::fabs(a.v)); }
inline XReal xexp(XReal a) { return XReal(std::exp(a.v)); }  // exp(-inf) = 0, exp(inf) = inf

/// |a - b| with equal infinities counting as deviation 0 and mismatched
/// infinities as +inf. Used by the verifiers to report worst-case gaps.
inline double deviation(XReal a, XReal b) {
    if (a.v == b.v) return 0.0;
    if (!a.finite() || !b.finite()) return std::numeric_limits<double>::infinity();
    return std::fabs(a.v - b.v);
}

/// Signed gap a - b for one-sided checks; equal infinities give 0.
inline double signed_gap(XReal a, XReal b) {
    if (a.v == b.v) return 0.0;
    if (a.is_pos_inf() || b.is_neg_inf()) return std::numeric_limits<double>::infinity();
    if (a.is_neg_inf() || b.is_pos_inf()) return -std::numeric_limits<double>::infinity();
    return a.v - b.v;
}

namespace detail {

/// Accumulator for E[xi+] and E[xi-]; weight p must be > 0.
struct PosNeg {
    double pos = 0.0;
    double neg = 0.0;

    void add(double p, XReal x) {
        if (x.v > 0.0) {
            if (x.finite()) pos += p * x.v;
            else pos = std::numeric_limits<double>::infinity();
        } else if (x.v < 0.0) {
            if (x.finite()) neg += p * (-x.v);
            else neg = std::numeric_limits<double>::infinity();
        }
    }

    XReal value() const {
        const bool pinf = std::isinf(pos);
        const bool ninf = std::isinf(neg);
        if (pinf && ninf) return XReal::neg_inf();  // both parts infinite
        if (pinf) return XReal::pos_inf();
        if (ninf) return XReal::neg_inf();
        return XReal(pos - neg);
    }
};

}  // namespace detail
}  // namespace treexp
