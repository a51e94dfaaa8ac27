// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gatclust/encoder.hpp"
#include "gatclust/graph_io.hpp"
#include "gatclust/kernels.hpp"
#include "gatclust/proximity.hpp"
#include "gatclust/rng.hpp"
#include "gatclust/selftrain.hpp"

namespace gatclust {

struct TrainConfig {
  double gamma = 10.0;          // clustering coefficient
  int t_order = 2;              // proximity order
  int update_interval = 5;      // iterations between target refreshes
  int pretrain_epochs = 200;
  int joint_iters = 200;
  double lr_pretrain = 0.005;
  double lr_joint = 0.0001;
  std::uint64_t seed = 0;
  int hidden_dim = 256;
  int embed_dim = 16;
  int k = 0;                    // 0 = take the class count from the labels
  std::string optimizer = "adam";        // or "sgd"
  std::string sigma = "lrelu-identity";  // see SigmaMode
  std::string attention = "per-layer";   // see AttentionMode
  std::string normalization;    // empty = keep the manifest's choice
  double weight_decay = 0.0;
  double dropout = 0.0;
  bool sampled_loss = false;
  int kmeans_restarts = 20;
  bool validate_distributions = false;

  void validate() const;
  static TrainConfig from_json_file(const std::string& path);
  static TrainConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct DatasetStamp {
  std::int32_t n = 0;
  std::int32_t attr_dim = 0;
  std::int64_t edges = 0;
  int classes = 0;
  int k_used = 0;
  bool attrs_binary = false;
  bool m_diagonal = false;  // proximity support includes self-relevance
  std::string normalization = "none";
};

struct IterationMetrics {
  double acc = 0.0;
  double nmi = 0.0;
  double fscore = 0.0;
  double ari = 0.0;
};

struct RunRecord {
  TrainConfig config;
  std::uint64_t seed = 0;
  DatasetStamp dataset;
  std::vector<double> pretrain_loss;            // per pretraining epoch
  std::vector<double> loss_r, loss_c, loss_total;  // per joint iteration
  std::vector<long> p_update_iters;
  std::vector<IterationMetrics> metrics;        // empty when unlabeled
  std::vector<std::int32_t> final_labels;
  double wall_seconds = 0.0;

  std::string to_json_text() const;
  void to_json_file(const std::string& path) const;
};

// Orchestrates the pipeline: reconstruction-only pretraining, one-shot
// k-means center initialization, then joint optimization of the
// reconstruction and self-training objectives with periodic target updates.
class Trainer {
 public:
  Trainer(const Graph& g, TrainConfig cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  void pretrain();
  const RunRecord& fit();
  // Runs the joint phase only up to the given iteration count; used to
  // split a run across checkpoints.
  const RunRecord& fit_until(long joint_iters);

  // Raises the joint-phase horizon, e.g. to continue a finished checkpoint.
  void set_joint_iters(int joint_iters);

  // Inference-mode embedding at the current parameters.
  const Mat& embedding();

  void save_checkpoint(const std::string& path) const;
  static std::unique_ptr<Trainer> resume(const Graph& g, const std::string& path);

  const RunRecord& record() const { return record_; }
  const TrainConfig& config() const { return cfg_; }
  const ClusterState& cluster() const { return cluster_; }
  const ProximityMatrix& proximity() const { return prox_; }
  ParamStore& params() { return store_; }
  GatAutoencoder& model() { return *model_; }
  int k() const { return k_; }
  long joint_done() const { return joint_done_; }

 private:
  void ensure_clustering();
  void joint_step(long iter);
  void check_distributions(long iter, double lc) const;
  void apply_weight_decay();
  void optimizer_step(double lr);
  void load_payload(const std::string& header_text, std::istream& in, const std::string& path);

  const Graph& g_;
  TrainConfig cfg_;
  Rng rng_;
  int k_ = 0;
  ProximityMatrix prox_;
  ParamStore store_;
  std::unique_ptr<GatAutoencoder> model_;
  ClusterState cluster_;
  RunRecord record_;
  bool pretrained_ = false;
  bool clustering_ready_ = false;
  long pretrain_done_ = 0;
  long joint_done_ = 0;
};

}  // namespace gatclust
