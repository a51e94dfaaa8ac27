// SPDX-License-Identifier: Apache-2.0
#include "gatclust/proximity.hpp"

#include <fstream>
#include <stdexcept>

namespace gatclust {

CsrMatrix transition_matrix(const Graph& g) {
  std::vector<Triplet> entries;
  entries.reserve(g.edges.size() * 2 + 8);
  for (std::int32_t i = 0; i < g.n; ++i) {
    const auto& nbrs = g.adjacency[i];
    if (nbrs.empty()) {
      entries.push_back({i, i, 1.0});
      continue;
    }
    const double w = 1.0 / static_cast<double>(nbrs.size());
    for (std::int32_t j : nbrs) entries.push_back({i, j, w});
  }
  return csr_from_triplets(g.n, g.n, std::move(entries));
}

ProximityMatrix build_proximity(const Graph& g, int t) {
  if (t < 1) throw std::invalid_argument("proximity: order t must be >= 1, got " + std::to_string(t));

  const CsrMatrix b = transition_matrix(g);

  // Accumulate B + B^2 + ... + B^t, then scale by 1/t.
  CsrMatrix power = b;
  CsrMatrix sum = b;
  for (int p = 2; p <= t; ++p) {
    power = csr_matmul(power, b, kProximityDropTol);
    std::vector<Triplet> merged;
    merged.reserve(sum.col.size() + power.col.size());
    for (std::int32_t i = 0; i < sum.rows; ++i) {
      for (std::int64_t e = sum.row_ptr[i]; e < sum.row_ptr[i + 1]; ++e) {
        merged.push_back({i, sum.col[e], sum.val[e]});
      }
      for (std::int64_t e = power.row_ptr[i]; e < power.row_ptr[i + 1]; ++e) {
        merged.push_back({i, power.col[e], power.val[e]});
      }
    }
    sum = csr_from_triplets(sum.rows, sum.cols, std::move(merged));
  }

  ProximityMatrix out;
  out.t = t;
  out.m = std::move(sum);
  const double inv_t = 1.0 / static_cast<double>(t);
  for (double& v : out.m.val) v *= inv_t;

  // Drop numerical noise while preserving exact support zeros.
  {
    std::vector<Triplet> kept;
    kept.reserve(out.m.col.size());
    for (std::int32_t i = 0; i < out.m.rows; ++i) {
      for (std::int64_t e = out.m.row_ptr[i]; e < out.m.row_ptr[i + 1]; ++e) {
        if (out.m.val[e] >= kProximityDropTol) kept.push_back({i, out.m.col[e], out.m.val[e]});
      }
    }
    out.m = csr_from_triplets(out.m.rows, out.m.cols, std::move(kept));
  }

  for (std::int32_t i = 0; i < out.m.rows; ++i) {
    if (out.m.row_ptr[i + 1] == out.m.row_ptr[i]) {
      throw std::runtime_error("proximity: node " + std::to_string(i) +
                               " has an empty neighborhood");
    }
  }
  out.m_transpose = build_transpose_index(out.m);
  return out;
}

void export_proximity(const ProximityMatrix& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("proximity: cannot write " + path);
  out.precision(17);
  for (std::int32_t i = 0; i < p.m.rows; ++i) {
    for (std::int64_t e = p.m.row_ptr[i]; e < p.m.row_ptr[i + 1]; ++e) {
      out << i << '\t' << p.m.col[e] << '\t' << p.m.val[e] << '\n';
    }
  }
}

}  // namespace gatclust
