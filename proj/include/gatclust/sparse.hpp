// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gatclust/dense.hpp"

namespace gatclust {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

// Compressed sparse rows with sorted column indices per row.
// Structure is fixed after construction; values may be rewritten in place.
struct CsrMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<std::int64_t> row_ptr;  // size rows + 1
  std::vector<std::int32_t> col;      // size nnz
  std::vector<double> val;            // size nnz

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }

  std::span<const std::int32_t> row_cols(std::int32_t i) const {
    return {col.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_vals(std::int32_t i) const {
    return {val.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }

  Mat to_dense() const;
};

// Builds a CSR matrix from triplets; duplicate coordinates are summed,
// columns end up sorted within each row.
CsrMatrix csr_from_triplets(std::int32_t rows, std::int32_t cols, std::vector<Triplet> entries);

// C = A * B, both CSR. Row-wise expansion with a dense accumulator;
// entries with magnitude <= drop_tol are discarded.
CsrMatrix csr_matmul(const CsrMatrix& a, const CsrMatrix& b, double drop_tol = 0.0);

// out = a * d where d is dense (rows of d gathered per sparse row).
void csr_times_dense(const CsrMatrix& a, const Mat& d, Mat& out);

// out += a^T * d (scatter form). out must be pre-sized cols(a) x cols(d).
void csr_transpose_times_dense_add(const CsrMatrix& a, const Mat& d, Mat& out);

// Transposed view of a fixed structure: for each column j of the source,
// the list of source entry indices whose col == j, plus their source rows.
struct CsrTransposeIndex {
  std::vector<std::int64_t> col_ptr;   // size cols + 1
  std::vector<std::int64_t> entry;     // index into source val
  std::vector<std::int32_t> src_row;   // row of that entry
};

CsrTransposeIndex build_transpose_index(const CsrMatrix& a);

}  // namespace gatclust
