// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gatclust/dense.hpp"
#include "gatclust/graph_io.hpp"
#include "gatclust/kernels.hpp"
#include "gatclust/proximity.hpp"
#include "gatclust/rng.hpp"

namespace gatclust {

// Nonlinearity placement: hidden layer / embedding layer.
enum class SigmaMode { LReluIdentity, LReluLRelu, IdentityIdentity };

// PerLayer recomputes attention from each layer's own input with that
// layer's attention vector. SharedInput computes attention once from the
// raw attributes and reuses it at both layers (the literal single-alpha
// reading, kept for ablation).
enum class AttentionMode { PerLayer, SharedInput };

SigmaMode sigma_mode_from_string(const std::string& s);
std::string to_string(SigmaMode m);
AttentionMode attention_mode_from_string(const std::string& s);
std::string to_string(AttentionMode m);

struct EncoderConfig {
  Eigen::Index hidden_dim = 256;
  Eigen::Index embed_dim = 16;
  double slope = 0.2;  // LeakyReLU slope, attention logits and hidden sigma
  SigmaMode sigma = SigmaMode::LReluIdentity;
  AttentionMode attention = AttentionMode::PerLayer;
  double dropout = 0.0;      // drop probability on the hidden layer
  bool sampled_loss = false; // subsampled reconstruction pairs (large graphs)
};

struct EncoderOutput {
  Mat h1;                     // n x hidden
  Mat z;                      // n x embed
  std::vector<double> alpha0; // attention weights, proximity-entry order
  std::vector<double> alpha1;
};

// Two-layer graph attention autoencoder with an inner-product decoder and
// a hand-wired backward pass. The graph, proximity matrix, and parameter
// store are borrowed and must outlive the model; parameters are expected
// under the names W0, W1, a0, a1 (see make_encoder_params).
class GatAutoencoder {
 public:
  GatAutoencoder(const Graph& g, const ProximityMatrix& prox, EncoderConfig cfg,
                 ParamStore& store);

  const EncoderConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }

  // Samples per-step stochastic state (dropout mask, negative pairs).
  // Call once before each optimizer step; no-op when both are disabled.
  void begin_step(Rng& rng);
  void set_training(bool training) { training_ = training; }

  // Recomputes H1 and Z from the current parameters. Returns Z.
  const Mat& forward();
  const Mat& embedding() const { return z_; }
  const std::vector<double>& alpha0() const { return alpha0_; }
  const std::vector<double>& alpha1() const { return alpha1_; }
  EncoderOutput output() const;

  // Dense sigmoid(Z Z^T) of the last forward. Quadratic in n.
  Mat decode() const;

  // Weighted cross-entropy between the adjacency and the decoded edge
  // probabilities, from the last forward. The _and_grad form also adds
  // dLoss/dZ into dz (n x embed, preallocated).
  double reconstruction_loss() const;
  double reconstruction_loss_and_grad(Mat& dz) const;

  // Propagates dLoss/dZ into the parameter gradients.
  void backward(const Mat& dz);

  // "n<TAB>dim" header, then one tab-separated row per node.
  void export_embedding(const std::string& path) const;

  // Attention weights for one layer given its input; exposed for tests.
  // Fills s, r, cm (logit caches) and returns the softmax weights in
  // proximity-entry order.
  std::vector<double> attention_coefficients(const Mat& input, const Mat& w, const Mat& a,
                                             Vec& s, Vec& r, std::vector<double>& cm) const;

 private:
  std::vector<double> attention_from_hw(const Mat& hw, const Mat& a, Vec& s, Vec& r,
                                        std::vector<double>& cm) const;
  void attention_backward(const std::vector<double>& alpha, const std::vector<double>& cm,
                          const Mat& hw, const Mat& a_value,
                          const std::vector<double>& dalpha, Mat& dhw, Mat& ga);
  double recon_impl(Mat* dz) const;
  bool dropout_active() const;
  const Mat& layer2_input() const { return dropout_active() ? h1d_ : h1_; }

  const Graph& g_;
  const ProximityMatrix& prox_;
  EncoderConfig cfg_;
  ParamStore& store_;

  bool use_sparse_x_ = false;
  CsrMatrix x_sparse_;

  bool training_ = true;
  Mat dropout_mask_;  // empty when dropout is off
  std::vector<std::pair<std::int32_t, std::int32_t>> sampled_negatives_;

  double w_pos_ = 0.0;
  std::int64_t ones_ = 0;

  // Forward caches.
  Mat hw0_, agg0_, h1_, h1d_, hw1_, agg1_, z_;
  Vec s0_, r0_, s1_, r1_;
  std::vector<double> cm0_, alpha0_, cm1_, alpha1_;
};

}  // namespace gatclust
