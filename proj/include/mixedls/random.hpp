#pragma once
//
// Project     : mixedls
// Module      : mixedls/random.hpp
// Description : seeded Gaussian vectors/matrices shared by the test-problem
//               generator and the validation suites
//

#include <cstdint>
#include <random>

#include "matrix.hpp"

namespace mixedls {

using rng_engine = std::mt19937_64;

inline std::vector<double> gaussian_vector(index_t n, rng_engine& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (index_t i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

inline dense_matrix<double> gaussian_matrix(index_t rows, index_t cols, rng_engine& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    dense_matrix<double> A(rows, cols);
    for (double& x : A.data()) x = g(rng);
    return A;
}

} // namespace mixedls
