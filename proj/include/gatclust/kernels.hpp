// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "gatclust/dense.hpp"
#include "gatclust/rng.hpp"
#include "gatclust/sparse.hpp"

namespace gatclust {

// --- dense kernels ---------------------------------------------------------

Mat matmul(const Mat& a, const Mat& b);
// gy is dLoss/d(a*b); contributions are accumulated into *ga and *gb
// (either may be null).
void matmul_backward(const Mat& a, const Mat& b, const Mat& gy, Mat* ga, Mat* gb);

Mat leaky_relu(const Mat& x, double slope);
// Returns dLoss/dx given the pre-activation input x.
Mat leaky_relu_backward(const Mat& x, const Mat& gy, double slope);

// Overflow-safe elementwise logistic.
Mat sigmoid(const Mat& x);
Mat sigmoid_backward(const Mat& y_sigmoid, const Mat& gy);

// log(1 + exp(x)) without overflow.
double softplus(double x);

// --- masked sparse softmax --------------------------------------------------

// Row softmax over the support of `structure` (max-subtracted). `logits`
// aligns with structure.val ordering. Every row must be nonempty.
std::vector<double> masked_row_softmax(const CsrMatrix& structure,
                                       const std::vector<double>& logits);
// Given softmax outputs y and dLoss/dy, returns dLoss/dlogits.
std::vector<double> masked_row_softmax_backward(const CsrMatrix& structure,
                                                const std::vector<double>& y,
                                                const std::vector<double>& gy);

// --- optimizers --------------------------------------------------------------

struct AdamSlots {
  Mat m;
  Mat v;
  void reset(Eigen::Index rows, Eigen::Index cols) {
    m = Mat::Zero(rows, cols);
    v = Mat::Zero(rows, cols);
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One adaptive-moment update; t is the 1-based step count after this update.
void adam_update(Mat& value, const Mat& grad, AdamSlots& slots, long t, const AdamConfig& cfg);
void sgd_update(Mat& value, const Mat& grad, double lr);

// --- parameter store ---------------------------------------------------------

// Named trainable tensors with gradient and optimizer slots. Entries live in
// a deque so references returned by add() and at() survive later additions.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    AdamSlots adam;
  };

  Tensor& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::deque<Entry>& entries() { return entries_; }
  const std::deque<Entry>& entries() const { return entries_; }

  void zero_grads();
  void step_adam(const AdamConfig& cfg);  // advances the shared step counter
  void step_sgd(double lr);
  void reset_optimizer();

  long adam_step_count() const { return adam_t_; }
  void set_adam_step_count(long t) { adam_t_ = t; }

 private:
  std::deque<Entry> entries_;
  long adam_t_ = 0;
};

// Scaled uniform init: W ~ U(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
void xavier_init(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

// Encoder parameters W0 (in x hidden), W1 (hidden x embed), a0 (2*hidden),
// a1 (2*embed), Xavier-initialized from the given rng.
ParamStore make_encoder_params(Eigen::Index in_dim, Eigen::Index hidden_dim,
                               Eigen::Index embed_dim, Rng& rng);

// --- gradient checking --------------------------------------------------------

// Central-difference check of every entry in `store` against the analytic
// grads that `backward` fills in. Samples up to `samples_per_tensor`
// coordinates per tensor. Returns max over sampled coordinates of
// |analytic - central| / max(1, |central|).
double grad_check(const std::function<double()>& loss, const std::function<void()>& backward,
                  ParamStore& store, double eps, int samples_per_tensor, Rng& rng);

}  // namespace gatclust
