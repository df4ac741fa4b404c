#pragma once

#include "bayescg/sparse.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// Sparse lower-triangular factor. The stored matrix must have no entries above
// the diagonal; when unit_diagonal is false every diagonal entry must be
// present and strictly positive. Unit factors leave the diagonal implicit
// (not stored).
struct TriangularFactor {
    SparseMatrix lower;
    bool unit_diagonal = false;
};

// Validates triangular structure and diagonal positivity; throws std::invalid_argument.
TriangularFactor make_triangular_factor(SparseMatrix lower, bool unit_diagonal = false);

Vector solve_lower(const TriangularFactor& f, const Vector& b);            // L x = b
Vector solve_lower_transpose(const TriangularFactor& f, const Vector& b);  // L' x = b
Vector apply_lower(const TriangularFactor& f, const Vector& v);            // L v
Vector apply_lower_transpose(const TriangularFactor& f, const Vector& v);  // L' v

}  // namespace bayescg
