// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace gatclust {

// External clustering quality versus ground truth. All metrics are invariant
// under permutations of the predicted cluster ids.
struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  double fscore = 0.0;
  double ari = 0.0;
  // mapping[c] = class id assigned to predicted cluster c, -1 when unmatched.
  std::vector<int> mapping;
  std::string fscore_variant = "macro-after-acc-mapping";
  std::string nmi_normalization = "arithmetic";

  std::string to_json() const;
  std::string to_table() const;
};

// Contingency counts: cell (t, p) = #nodes with truth t and prediction p.
std::vector<std::vector<long long>> contingency_table(const std::vector<int>& pred,
                                                      const std::vector<int>& truth);

// Exact maximum-weight one-to-one assignment on a square weight matrix.
// Returns per-row matched column.
std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                std::vector<int>* mapping = nullptr);
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);
double ari(const std::vector<int>& pred, const std::vector<int>& truth);
double fscore(const std::vector<int>& pred, const std::vector<int>& truth);

MetricsReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth);

}  // namespace gatclust
