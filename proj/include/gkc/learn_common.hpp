#pragma once

// Shared pieces for the classifiers: a lightweight dataset view, the
// canonical row order that makes training invariant to input row
// permutation, and small numeric helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "gkc/common.hpp"
#include "gkc/hash.hpp"

namespace gkc {

/// Non-owning view of a row-major dense matrix.
struct MatrixView {
    const double* data = nullptr;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    const double* row(std::size_t i) const { return data + i * n_cols; }
    double at(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }
};

inline void check_two_classes(const std::vector<int>& y) {
    bool has0 = false, has1 = false;
    for (int v : y) {
        has0 |= v == 0;
        has1 |= v == 1;
    }
    if (!has0 || !has1) throw SingleClassError("training labels contain a single class");
}

inline double sigmoid(double z) {
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

/// Rows ordered by (content hash, bytes, label): a data-determined order
/// used for every training-time reduction, so permuting input rows cannot
/// change any sum and therefore cannot change the fitted model.
inline std::vector<std::size_t> canonical_row_order(const MatrixView& X,
                                                    const std::vector<int>& y) {
    const std::size_t n = X.n_rows;
    std::vector<std::uint64_t> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        const double* r = X.row(i);
        for (std::size_t j = 0; j < X.n_cols; ++j) {
            std::uint64_t bits;
            std::memcpy(&bits, &r[j], 8);
            h = mix64(h ^ bits);
        }
        key[i] = mix64(h ^ static_cast<std::uint64_t>(y[i]));
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        if (y[a] != y[b]) return y[a] < y[b];
        const double* ra = X.row(a);
        const double* rb = X.row(b);
        return std::lexicographical_compare(ra, ra + X.n_cols, rb, rb + X.n_cols);
    });
    return order;
}

}  // namespace gkc
