// SPDX-License-Identifier: Apache-2.0
#include "gatclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gatclust {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("metrics: " + msg); }

void check_inputs(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) fail("prediction and truth lengths differ");
  if (pred.empty()) fail("empty label vectors");
  for (int v : pred)
    if (v < 0) fail("negative predicted label");
  for (int v : truth)
    if (v < 0) fail("negative truth label");
}

int num_ids(const std::vector<int>& labels) {
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

// Kuhn-Munkres with potentials, O(n^3), exact for integer costs.
std::vector<int> min_cost_assignment(const std::vector<std::vector<long long>>& a) {
  const int n = static_cast<int>(a.size());
  const long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      long long delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<std::vector<long long>> contingency_table(const std::vector<int>& pred,
                                                      const std::vector<int>& truth) {
  check_inputs(pred, truth);
  const int kt = num_ids(truth);
  const int kp = num_ids(pred);
  std::vector<std::vector<long long>> table(kt, std::vector<long long>(kp, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) table[truth[i]][pred[i]]++;
  return table;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight) {
  const int n = static_cast<int>(weight.size());
  if (n == 0) fail("empty assignment problem");
  long long max_w = 0;
  for (const auto& row : weight) {
    if (static_cast<int>(row.size()) != n) fail("assignment matrix must be square");
    for (long long w : row) {
      if (w < 0) fail("assignment weights must be nonnegative");
      max_w = std::max(max_w, w);
    }
  }
  std::vector<std::vector<long long>> cost(n, std::vector<long long>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[i][j] = max_w - weight[i][j];
  return min_cost_assignment(cost);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                std::vector<int>* mapping) {
  const auto table = contingency_table(pred, truth);
  const int kt = static_cast<int>(table.size());
  const int kp = static_cast<int>(table[0].size());
  const int s = std::max(kt, kp);

  // Rows are predicted clusters, columns are classes; zero padding makes the
  // problem square when the counts differ.
  std::vector<std::vector<long long>> weight(s, std::vector<long long>(s, 0));
  for (int t = 0; t < kt; ++t)
    for (int c = 0; c < kp; ++c) weight[c][t] = table[t][c];

  const std::vector<int> match = max_weight_assignment(weight);
  long long correct = 0;
  std::vector<int> map(kp, -1);
  for (int c = 0; c < kp; ++c) {
    const int cls = match[c];
    if (cls < kt) {
      map[c] = cls;
      correct += table[cls][c];
    }
  }
  if (mapping) *mapping = std::move(map);
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto table = contingency_table(pred, truth);
  const int kt = static_cast<int>(table.size());
  const int kp = static_cast<int>(table[0].size());
  const double n = static_cast<double>(pred.size());

  std::vector<double> a(kt, 0.0), b(kp, 0.0);
  for (int t = 0; t < kt; ++t)
    for (int c = 0; c < kp; ++c) {
      a[t] += static_cast<double>(table[t][c]);
      b[c] += static_cast<double>(table[t][c]);
    }

  double h_true = 0.0, h_pred = 0.0, mi = 0.0;
  for (int t = 0; t < kt; ++t) {
    if (a[t] > 0) h_true -= a[t] / n * std::log(a[t] / n);
  }
  for (int c = 0; c < kp; ++c) {
    if (b[c] > 0) h_pred -= b[c] / n * std::log(b[c] / n);
  }
  for (int t = 0; t < kt; ++t) {
    for (int c = 0; c < kp; ++c) {
      const auto cell = static_cast<double>(table[t][c]);
      if (cell > 0) mi += cell / n * std::log(n * cell / (a[t] * b[c]));
    }
  }

  if (h_true == 0.0 && h_pred == 0.0) return 1.0;  // both trivial partitions
  const double normalizer = 0.5 * (h_true + h_pred);
  if (normalizer <= 0.0 || mi <= 0.0) return 0.0;
  return std::clamp(mi / normalizer, 0.0, 1.0);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto table = contingency_table(pred, truth);
  const int kt = static_cast<int>(table.size());
  const int kp = static_cast<int>(table[0].size());
  const auto n = static_cast<long long>(pred.size());

  auto choose2 = [](long long x) { return x * (x - 1) / 2; };

  long long sum_cells = 0, sum_a = 0, sum_b = 0;
  std::vector<long long> a(kt, 0), b(kp, 0);
  for (int t = 0; t < kt; ++t) {
    for (int c = 0; c < kp; ++c) {
      sum_cells += choose2(table[t][c]);
      a[t] += table[t][c];
      b[c] += table[t][c];
    }
  }
  for (int t = 0; t < kt; ++t) sum_a += choose2(a[t]);
  for (int c = 0; c < kp; ++c) sum_b += choose2(b[c]);

  const double total = static_cast<double>(choose2(n));
  const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / total;
  const double max_index = 0.5 * (static_cast<double>(sum_a) + static_cast<double>(sum_b));
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both partitions degenerate in the same way
  return (static_cast<double>(sum_cells) - expected) / denom;
}

double fscore(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::vector<int> mapping;
  accuracy(pred, truth, &mapping);
  const int kt = num_ids(truth);

  std::vector<long long> tp(kt, 0), fp(kt, 0), fn(kt, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int mapped = mapping[pred[i]];
    if (mapped == truth[i]) {
      tp[truth[i]]++;
    } else {
      if (mapped >= 0) fp[mapped]++;
      fn[truth[i]]++;
    }
  }
  double sum_f1 = 0.0;
  for (int c = 0; c < kt; ++c) {
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    sum_f1 += denom > 0 ? 2.0 * static_cast<double>(tp[c]) / denom : 0.0;
  }
  return sum_f1 / static_cast<double>(kt);
}

MetricsReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth) {
  MetricsReport r;
  r.acc = accuracy(pred, truth, &r.mapping);
  r.nmi = nmi(pred, truth);
  r.ari = ari(pred, truth);
  r.fscore = fscore(pred, truth);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["acc"] = acc;
  j["nmi"] = nmi;
  j["fscore"] = fscore;
  j["ari"] = ari;
  j["mapping"] = mapping;
  j["fscore_variant"] = fscore_variant;
  j["nmi_normalization"] = nmi_normalization;
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "metric   value\n";
  out << "ACC      " << acc << '\n';
  out << "NMI      " << nmi << '\n';
  out << "F-score  " << fscore << '\n';
  out << "ARI      " << ari << '\n';
  return out.str();
}

}  // namespace gatclust
