#pragma once

#include <filesystem>

#include "bayescg/dense.hpp"
#include "bayescg/sparse.hpp"
#include "bayescg/vec.hpp"

namespace bayescg {

// Matrix Market exchange format. Sparse matrices use the coordinate layout
// (optionally with the symmetric qualifier, storing the lower triangle);
// dense matrices and vectors use the array layout. Readers accept either
// layout and mirror symmetric entries.

void write_matrix_market(const SparseMatrix& a, const std::filesystem::path& path,
                         bool symmetric = false);
void write_matrix_market(const DenseMatrix& a, const std::filesystem::path& path);
void write_matrix_market(const Vector& v, const std::filesystem::path& path);

SparseMatrix read_matrix_market_sparse(const std::filesystem::path& path);
DenseMatrix read_matrix_market_dense(const std::filesystem::path& path);
Vector read_matrix_market_vector(const std::filesystem::path& path);

}  // namespace bayescg
