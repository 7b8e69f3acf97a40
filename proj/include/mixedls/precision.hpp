#pragma once
//
// Project     : mixedls
// Module      : mixedls/precision.hpp
// Description : precision levels, demotion/promotion with overflow-safe
//               scaling, and double-double accumulation kernels
//

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace mixedls {

enum class precision_tag { low, working, extended };

// One of the three precision levels the solvers run at:
//   low      = IEEE binary32 storage and arithmetic, u = 2^-24
//   working  = IEEE binary64,                        u = 2^-53
//   extended = double-double accumulation,           u ≈ 2^-106
class precision_level {
public:
    constexpr precision_level() = default;

    static constexpr precision_level low() { return precision_level(precision_tag::low); }
    static constexpr precision_level working() { return precision_level(precision_tag::working); }
    static constexpr precision_level extended() { return precision_level(precision_tag::extended); }

    constexpr precision_tag tag() const { return tag_; }

    constexpr double unit_roundoff() const {
        switch (tag_) {
            case precision_tag::low: return 0x1p-24;
            case precision_tag::working: return 0x1p-53;
            case precision_tag::extended: return 0x1p-106;
        }
        return 0x1p-53;
    }

    friend constexpr bool operator==(precision_level a, precision_level b) {
        return a.tag_ == b.tag_;
    }
    friend constexpr bool operator!=(precision_level a, precision_level b) {
        return a.tag_ != b.tag_;
    }

private:
    constexpr explicit precision_level(precision_tag t) : tag_(t) {}
    precision_tag tag_ = precision_tag::working;
};

// The four-precision scheme u_f >= u_s >= u >= u_r (unit roundoffs).
// `working` is fixed at binary64; `factor`/`solve` may be low, `residual`
// may be extended.
struct precision_config {
    precision_level factor = precision_level::low();
    precision_level solve = precision_level::low();
    precision_level working = precision_level::working();
    precision_level residual = precision_level::working();

    void validate() const {
        if (working != precision_level::working())
            throw invalid_input("precision_config: working precision must be binary64");
        if (factor.unit_roundoff() < solve.unit_roundoff() ||
            solve.unit_roundoff() < working.unit_roundoff() ||
            working.unit_roundoff() < residual.unit_roundoff())
            throw invalid_input("precision_config: requires u_f >= u_s >= u >= u_r");
    }

    // (single, single, double, double) -- the default experiment setting
    static precision_config classical() { return precision_config{}; }

    // (single, single, double, double-double)
    static precision_config classical_extended() {
        precision_config c;
        c.residual = precision_level::extended();
        return c;
    }

    // everything at binary64
    static precision_config all_working(precision_level residual = precision_level::working()) {
        precision_config c;
        c.factor = precision_level::working();
        c.solve = precision_level::working();
        c.residual = residual;
        return c;
    }
};

// A binary32 vector together with the binary64 factor divided out before
// demotion, so that promote() reconstructs the original values.
struct scaled_low_vector {
    std::vector<float> data;
    double scale = 1.0;
};

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Demote to binary32 after dividing out the max-abs of the vector, so no
// finite input can overflow the binary32 range.
inline scaled_low_vector demote_vector(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw invalid_input("demote_vector: non-finite input");
        s = std::max(s, std::abs(x));
    }
    if (s == 0.0) s = 1.0;
    scaled_low_vector out;
    out.scale = s;
    out.data.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.data[i] = static_cast<float>(v[i] / s);
    return out;
}

inline std::vector<double> promote_vector(const scaled_low_vector& w) {
    std::vector<double> out(w.data.size());
    for (std::size_t i = 0; i < w.data.size(); ++i)
        out[i] = w.scale * static_cast<double>(w.data[i]);
    return out;
}

namespace detail {

// Knuth two-sum: s + e = a + b exactly.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double z = s - a;
    e = (a - (s - z)) + (b - z);
}

// FMA-based two-prod: p + e = a * b exactly.
inline void two_prod(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

} // namespace detail

// Dot product accumulated in double-double via error-free transformations
// (the Dot2 scheme), rounded to binary64 at the end.
inline double extended_dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p, pe, se;
        detail::two_prod(x[i], y[i], p, pe);
        detail::two_sum(s, p, s, se);
        c += se + pe;
    }
    return s + c;
}

inline double extended_dot(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw dimension_error("extended_dot: length mismatch");
    return extended_dot(x.data(), y.data(), x.size());
}

// Strided variant for row access into column-major storage.
inline double extended_dot_strided(const double* x, std::size_t stride_x, const double* y,
                                   std::size_t n) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p, pe, se;
        detail::two_prod(x[i * stride_x], y[i], p, pe);
        detail::two_sum(s, p, s, se);
        c += se + pe;
    }
    return s + c;
}

} // namespace mixedls
