// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gatclust/metrics.hpp"
#include "gatclust/rng.hpp"

using namespace gatclust;

namespace {

int label_count(const std::vector<int>& v) {
  return *std::max_element(v.begin(), v.end()) + 1;
}

// Exhaustive assignment search; tractable for k <= 6.
double acc_bruteforce(const std::vector<int>& pred, const std::vector<int>& truth) {
  const int k = std::max(label_count(pred), label_count(truth));
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  long long best = 0;
  do {
    long long correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++correct;
    }
    best = std::max(best, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

// Plain-formula mutual information with arithmetic-mean normalization.
double nmi_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto table = contingency_table(pred, truth);
  const double n = static_cast<double>(pred.size());
  const std::size_t rows = table.size();
  const std::size_t cols = table[0].size();
  std::vector<double> a(rows, 0.0), b(cols, 0.0);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t p = 0; p < cols; ++p) {
      a[t] += static_cast<double>(table[t][p]);
      b[p] += static_cast<double>(table[t][p]);
    }
  }
  double mi = 0.0, ht = 0.0, hp = 0.0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (a[t] > 0.0) ht -= a[t] / n * std::log(a[t] / n);
  }
  for (std::size_t p = 0; p < cols; ++p) {
    if (b[p] > 0.0) hp -= b[p] / n * std::log(b[p] / n);
  }
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t p = 0; p < cols; ++p) {
      const double nij = static_cast<double>(table[t][p]);
      if (nij > 0.0) mi += nij / n * std::log(nij * n / (a[t] * b[p]));
    }
  }
  if (ht == 0.0 && hp == 0.0) return 1.0;
  const double norm = 0.5 * (ht + hp);
  if (norm <= 0.0 || mi <= 0.0) return 0.0;
  return std::min(1.0, mi / norm);
}

// Pair-counting adjusted index straight from the textbook formula.
double ari_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto table = contingency_table(pred, truth);
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> b(table[0].size(), 0.0);
  for (const auto& row : table) {
    double a = 0.0;
    for (std::size_t p = 0; p < row.size(); ++p) {
      sum_cells += c2(static_cast<double>(row[p]));
      a += static_cast<double>(row[p]);
      b[p] += static_cast<double>(row[p]);
    }
    sum_a += c2(a);
  }
  for (double bp : b) sum_b += c2(bp);
  const double total = c2(static_cast<double>(pred.size()));
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (sum_cells - expected) / (maximum - expected);
}

std::vector<int> random_partition(std::size_t n, int k, Rng& rng) {
  std::vector<int> labels(n);
  // guarantee every cluster id appears, then shuffle
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
  return labels;
}

}  // namespace

TEST_CASE("perfect clusterings score one under any relabeling") {
  const std::vector<int> truth = {0, 0, 1, 1, 2, 2};
  const std::vector<int> pred = {2, 2, 0, 0, 1, 1};
  const MetricsReport r = evaluate_clustering(pred, truth);
  CHECK(r.acc == 1.0);
  CHECK(r.nmi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.fscore == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ari == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.mapping.size() == 3);
  CHECK(r.mapping[2] == 0);
  CHECK(r.mapping[0] == 1);
  CHECK(r.mapping[1] == 2);
}

TEST_CASE("half-right two-cluster case") {
  const std::vector<int> pred = {0, 0, 1, 1};
  const std::vector<int> truth = {0, 1, 0, 1};
  CHECK(accuracy(pred, truth) == 0.5);
  CHECK(fscore(pred, truth) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(nmi(pred, truth) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ari(pred, truth) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("constant prediction has zero shared information") {
  const std::vector<int> pred = {0, 0, 0, 0};
  const std::vector<int> truth = {0, 1, 0, 1};
  CHECK(nmi(pred, truth) == 0.0);
  CHECK(accuracy(pred, truth) == 0.5);
}

TEST_CASE("identical trivial partitions count as agreement") {
  const std::vector<int> pred = {0, 0, 0};
  const std::vector<int> truth = {1, 1, 1};
  CHECK(nmi(pred, truth) == 1.0);
  CHECK(ari(pred, truth) == 1.0);
  CHECK(accuracy(pred, truth) == 1.0);
}

TEST_CASE("contingency table is classes by clusters") {
  const std::vector<int> pred = {0, 1, 2, 2};  // 3 predicted clusters
  const std::vector<int> truth = {0, 0, 1, 1};  // 2 classes
  const auto table = contingency_table(pred, truth);
  REQUIRE(table.size() == 2);
  REQUIRE(table[0].size() == 3);
  CHECK(table[0] == std::vector<long long>{1, 1, 0});
  CHECK(table[1] == std::vector<long long>{0, 0, 2});
}

TEST_CASE("assignment solver maximizes total weight on a known matrix") {
  const std::vector<std::vector<long long>> w = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const std::vector<int> match = max_weight_assignment(w);
  // optimum is 0->0, 1->2, 2->1 with weight 11
  CHECK(match == std::vector<int>{0, 2, 1});
}

TEST_CASE("accuracy equals the permutation brute force on random partitions") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 15 + rng.index(40);
    const int kp = 2 + static_cast<int>(rng.index(5));  // up to 6
    const int kt = 2 + static_cast<int>(rng.index(5));
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng.index(static_cast<std::size_t>(kp)));
      truth[i] = static_cast<int>(rng.index(static_cast<std::size_t>(kt)));
    }
    std::vector<int> mapping;
    const double fast = accuracy(pred, truth, &mapping);
    CHECK(fast == doctest::Approx(acc_bruteforce(pred, truth)).epsilon(1e-15));

    // the mapping must reproduce the score it claims
    long long correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mapping[static_cast<std::size_t>(pred[i])] == truth[i]) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(n) == fast);
  }
}

TEST_CASE("information and pair-counting metrics match plain-formula references") {
  Rng rng(32);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 20 + rng.index(100);
    const int kp = 2 + static_cast<int>(rng.index(7));
    const int kt = 2 + static_cast<int>(rng.index(7));
    const std::vector<int> pred = random_partition(n, kp, rng);
    const std::vector<int> truth = random_partition(n, kt, rng);
    CHECK(nmi(pred, truth) == doctest::Approx(nmi_oracle(pred, truth)).epsilon(1e-12));
    CHECK(ari(pred, truth) == doctest::Approx(ari_oracle(pred, truth)).epsilon(1e-12));
  }
}

TEST_CASE("adjusted index is centered near zero for independent partitions") {
  Rng rng(33);
  double sum = 0.0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const std::vector<int> pred = random_partition(60, 3, rng);
    const std::vector<int> truth = random_partition(60, 3, rng);
    sum += ari(pred, truth);
  }
  CHECK(std::abs(sum / trials) < 0.05);
}

TEST_CASE("metrics are invariant under relabeling the prediction") {
  Rng rng(34);
  const std::vector<int> truth = random_partition(50, 4, rng);
  const std::vector<int> pred = random_partition(50, 4, rng);
  std::vector<int> relabeled(pred.size());
  const int remap[4] = {2, 3, 1, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) relabeled[i] = remap[pred[i]];
  CHECK(accuracy(pred, truth) == accuracy(relabeled, truth));
  CHECK(nmi(pred, truth) == doctest::Approx(nmi(relabeled, truth)).epsilon(1e-14));
  CHECK(ari(pred, truth) == doctest::Approx(ari(relabeled, truth)).epsilon(1e-14));
  CHECK(fscore(pred, truth) == doctest::Approx(fscore(relabeled, truth)).epsilon(1e-14));
}

TEST_CASE("reports serialize with the variant strings") {
  const MetricsReport r = evaluate_clustering({0, 1}, {1, 0});
  const std::string j = r.to_json();
  CHECK(j.find("macro-after-acc-mapping") != std::string::npos);
  CHECK(j.find("arithmetic") != std::string::npos);
  CHECK(j.find("\"acc\"") != std::string::npos);
  const std::string t = r.to_table();
  CHECK(t.find("ACC") != std::string::npos);
}

TEST_CASE("metrics reject malformed inputs") {
  CHECK_THROWS(accuracy({}, {}));
  CHECK_THROWS(accuracy({0, 1}, {0}));
  CHECK_THROWS(nmi({0, -1}, {0, 1}));
}
