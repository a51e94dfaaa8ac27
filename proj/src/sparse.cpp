// SPDX-License-Identifier: Apache-2.0
#include "gatclust/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gatclust {

Mat CsrMatrix::to_dense() const {
  Mat out = Mat::Zero(rows, cols);
  for (std::int32_t i = 0; i < rows; ++i) {
    for (std::int64_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      out(i, col[e]) += val[e];
    }
  }
  return out;
}

CsrMatrix csr_from_triplets(std::int32_t rows, std::int32_t cols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::invalid_argument("csr_from_triplets: coordinate out of range");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  m.col.reserve(entries.size());
  m.val.reserve(entries.size());

  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    double sum = entries[i].value;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    m.col.push_back(entries[i].col);
    m.val.push_back(sum);
    m.row_ptr[entries[i].row + 1]++;
    i = j;
  }
  for (std::int32_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix csr_matmul(const CsrMatrix& a, const CsrMatrix& b, double drop_tol) {
  if (a.cols != b.rows) throw std::invalid_argument("csr_matmul: inner dimensions disagree");

  CsrMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_ptr.assign(static_cast<std::size_t>(a.rows) + 1, 0);

  std::vector<double> acc(static_cast<std::size_t>(b.cols), 0.0);
  std::vector<std::int32_t> touched;
  touched.reserve(64);

  for (std::int32_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::int64_t ea = a.row_ptr[i]; ea < a.row_ptr[i + 1]; ++ea) {
      const std::int32_t k = a.col[ea];
      const double av = a.val[ea];
      for (std::int64_t eb = b.row_ptr[k]; eb < b.row_ptr[k + 1]; ++eb) {
        const std::int32_t j = b.col[eb];
        if (acc[j] == 0.0) touched.push_back(j);
        acc[j] += av * b.val[eb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::int32_t j : touched) {
      if (std::abs(acc[j]) > drop_tol) {
        c.col.push_back(j);
        c.val.push_back(acc[j]);
      }
      acc[j] = 0.0;
    }
    c.row_ptr[i + 1] = static_cast<std::int64_t>(c.col.size());
  }
  return c;
}

void csr_times_dense(const CsrMatrix& a, const Mat& d, Mat& out) {
  if (a.cols != d.rows()) throw std::invalid_argument("csr_times_dense: shape mismatch");
  out.setZero(a.rows, d.cols());
  for (std::int32_t i = 0; i < a.rows; ++i) {
    auto row = out.row(i);
    for (std::int64_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      row.noalias() += a.val[e] * d.row(a.col[e]);
    }
  }
}

void csr_transpose_times_dense_add(const CsrMatrix& a, const Mat& d, Mat& out) {
  if (a.rows != d.rows() || out.rows() != a.cols || out.cols() != d.cols()) {
    throw std::invalid_argument("csr_transpose_times_dense_add: shape mismatch");
  }
  for (std::int32_t i = 0; i < a.rows; ++i) {
    const auto src = d.row(i);
    for (std::int64_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      out.row(a.col[e]).noalias() += a.val[e] * src;
    }
  }
}

CsrTransposeIndex build_transpose_index(const CsrMatrix& a) {
  CsrTransposeIndex t;
  t.col_ptr.assign(static_cast<std::size_t>(a.cols) + 1, 0);
  t.entry.resize(a.col.size());
  t.src_row.resize(a.col.size());

  for (std::int32_t c : a.col) t.col_ptr[c + 1]++;
  for (std::int32_t c = 0; c < a.cols; ++c) t.col_ptr[c + 1] += t.col_ptr[c];

  std::vector<std::int64_t> cursor(t.col_ptr.begin(), t.col_ptr.end() - 1);
  for (std::int32_t i = 0; i < a.rows; ++i) {
    for (std::int64_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      const std::int64_t slot = cursor[a.col[e]]++;
      t.entry[slot] = e;
      t.src_row[slot] = i;
    }
  }
  return t;
}

}  // namespace gatclust
