#pragma once

#include <optional>

#include "bayescg/sparse.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// A linear system A x = b with A symmetric positive definite, plus the ground
// truth solution when it is known (generated problems keep it for error traces).
struct LinearSystem {
    SparseMatrix a;
    Vector b;
    std::optional<Vector> x_star;

    std::size_t dim() const { return a.dim(); }
};

}  // namespace bayescg
