#pragma once
//
// Project     : mixedls
// Module      : mixedls/refine.hpp
// Description : configuration, traces, and shared plumbing of the
//               iterative refinement drivers
//

#include <chrono>
#include <limits>
#include <vector>

#include "precision.hpp"

namespace mixedls {

enum class refine_status { converged, max_iterations, diverged };

inline const char* to_string(refine_status s) {
    switch (s) {
        case refine_status::converged: return "converged";
        case refine_status::max_iterations: return "max_iterations";
        case refine_status::diverged: return "diverged";
    }
    return "unknown";
}

struct refinement_config {
    double tol = 1e-13;
    std::size_t maxit = 40;
    precision_config precisions = precision_config::classical();

    void validate() const {
        if (!(tol > 0.0)) throw invalid_input("refinement_config: tol must be positive");
        if (maxit < 1) throw invalid_input("refinement_config: maxit must be >= 1");
        precisions.validate();
    }
};

// (||f1||, ||f2||, ||f3||) of one refinement pass
struct residual_norms {
    double f1 = 0.0, f2 = 0.0, f3 = 0.0;
};

// wall-clock seconds per algorithm component
struct phase_times {
    double factorization = 0.0;
    double init = 0.0;
    double residual = 0.0;
    double correction = 0.0;
    double gmres = 0.0;
    double other = 0.0;
};

struct refinement_trace {
    refine_status status = refine_status::max_iterations;
    std::size_t iterations = 0; // loop passes; one residual triple recorded per pass
    std::vector<residual_norms> residual_history;
    std::size_t inner_iterations = 0; // cumulative GMRES iterations (0 for classical IR)
    phase_times timing;
};

namespace detail {

class stopwatch {
public:
    double lap() {
        const auto now = clock::now();
        const double s = std::chrono::duration<double>(now - t0_).count();
        t0_ = now;
        return s;
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point t0_ = clock::now();
};

// Flags divergence when the scaled residual max grows 1e4x over its
// running minimum (or turns non-finite).
class divergence_detector {
public:
    bool diverged(double scaled_residual_max) {
        if (!std::isfinite(scaled_residual_max)) return true;
        if (scaled_residual_max < best_) best_ = scaled_residual_max;
        return scaled_residual_max >= 1e4 * best_ && best_ > 0.0;
    }

private:
    double best_ = std::numeric_limits<double>::infinity();
};

inline double nonzero_or_one(double s) { return s == 0.0 ? 1.0 : s; }

inline std::vector<double> divide(const std::vector<double>& v, double s) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / s;
    return out;
}

// common demotion scale across stacked residual blocks (the saddle system
// is linear only under one scalar)
inline double common_scale(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<double>& c) {
    const double s = std::max({max_abs(a), max_abs(b), max_abs(c)});
    return s == 0.0 ? 1.0 : s;
}

inline std::vector<float> demote_with_scale(const std::vector<double>& v, double s) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / s);
    return out;
}

inline std::vector<double> promote_with_scale(const std::vector<float>& v, double s) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * double(v[i]);
    return out;
}

} // namespace detail

} // namespace mixedls
