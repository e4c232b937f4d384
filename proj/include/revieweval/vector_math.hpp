#pragma once

#include "revieweval/errors.hpp"
#include "revieweval/gateway.hpp"

#include <cmath>

namespace revieweval {

/// Cosine of the angle between two vectors; 0 when either has zero norm.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(Errc::DimensionMismatch, "cosine of vectors with dims " + std::to_string(a.dim()) +
                                                 " and " + std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    // sqrt(na * nb) makes identical vectors score exactly 1.
    return dot / std::sqrt(na * nb);
}

}  // namespace revieweval
