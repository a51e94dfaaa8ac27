// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gatclust/dense.hpp"
#include "gatclust/rng.hpp"

namespace gatclust {

struct KmeansConfig {
  int restarts = 20;
  int max_iters = 300;
  double tol = 1e-6;  // relative inertia change
};

// Lloyd's iterations with greedy k-means++ seeding; returns the k x d
// centers of the best restart. Empty clusters are re-seeded from the point
// farthest from its assigned center.
Mat kmeans(const Mat& z, int k, const KmeansConfig& cfg, Rng& rng);

// Student-t soft assignment: q_iu ∝ 1 / (1 + ||z_i - mu_u||^2), rows sum to 1.
Mat soft_assign(const Mat& z, const Mat& mu);

// Sharpened, frequency-normalized target: p_iu ∝ q_iu^2 / sum_i q_iu.
Mat target_distribution(const Mat& q);

// KL(P||Q) with P treated as constant.
double clustering_loss(const Mat& p, const Mat& q);

// Adds scale * dL/dZ into gz and scale * dL/dmu into gmu (Q is a function
// of Z and mu; P is held constant). Returns the unscaled loss.
double clustering_loss_grads(const Mat& z, const Mat& mu, const Mat& q, const Mat& p,
                             double scale, Mat& gz, Mat& gmu);

// Argmax per row, ties toward the smaller index.
std::vector<std::int32_t> hard_labels(const Mat& q);

// Soft assignments and the current self-training target. The trainable
// centers live in the trainer's parameter store (entry "mu") so the
// optimizer steps them alongside the network weights.
struct ClusterState {
  int k = 0;
  Mat q;
  Mat p;
  long last_p_update = -1;
};

// True when every row is nonnegative and sums to 1 within tol.
bool rows_are_distributions(const Mat& m, double tol);

void save_labels(const std::string& path, const std::vector<std::int32_t>& labels);
std::vector<std::int32_t> load_labels(const std::string& path);

// "rows<TAB>cols" header, then tab-separated rows at full precision.
void save_distribution(const std::string& path, const Mat& m);

}  // namespace gatclust
