// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "gatclust/graph_io.hpp"
#include "gatclust/sparse.hpp"

namespace gatclust {

// Entries below this are treated as numerical noise and dropped from M.
inline constexpr double kProximityDropTol = 1e-12;

// t-order topological relevance: M = (B + B^2 + ... + B^t) / t, with the
// attention neighborhood of node i being the support of row i.
struct ProximityMatrix {
  int t = 0;
  CsrMatrix m;                 // n x n, entries in [0, 1]
  CsrTransposeIndex m_transpose;

  std::int32_t n() const { return m.rows; }
  std::span<const std::int32_t> neighborhood(std::int32_t i) const { return m.row_cols(i); }
};

// B_ij = 1/deg(i) for edges, 0 otherwise; isolated nodes get B_ii = 1 so
// every neighborhood stays nonempty.
CsrMatrix transition_matrix(const Graph& g);

ProximityMatrix build_proximity(const Graph& g, int t);

// "i<TAB>j<TAB>value" per entry.
void export_proximity(const ProximityMatrix& p, const std::string& path);

}  // namespace gatclust
