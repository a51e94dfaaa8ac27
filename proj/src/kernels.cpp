// SPDX-License-Identifier: Apache-2.0
#include "gatclust/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gatclust {

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                ")");
  }
  return a * b;
}

void matmul_backward(const Mat& a, const Mat& b, const Mat& gy, Mat* ga, Mat* gb) {
  if (gy.rows() != a.rows() || gy.cols() != b.cols()) {
    throw std::invalid_argument("matmul_backward: upstream gradient shape mismatch");
  }
  if (ga) ga->noalias() += gy * b.transpose();
  if (gb) gb->noalias() += a.transpose() * gy;
}

Mat leaky_relu(const Mat& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw std::invalid_argument("leaky_relu: slope must be in (0, 1)");
  }
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Mat leaky_relu_backward(const Mat& x, const Mat& gy, double slope) {
  if (x.rows() != gy.rows() || x.cols() != gy.cols()) {
    throw std::invalid_argument("leaky_relu_backward: shape mismatch");
  }
  return gy.binaryExpr(x, [slope](double g, double v) { return v > 0.0 ? g : slope * g; });
}

Mat sigmoid(const Mat& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Mat sigmoid_backward(const Mat& y_sigmoid, const Mat& gy) {
  return gy.cwiseProduct(y_sigmoid.cwiseProduct(Mat::Ones(y_sigmoid.rows(), y_sigmoid.cols()) -
                                                y_sigmoid));
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

std::vector<double> masked_row_softmax(const CsrMatrix& structure,
                                       const std::vector<double>& logits) {
  if (logits.size() != structure.val.size()) {
    throw std::invalid_argument("masked_row_softmax: logits do not align with structure");
  }
  std::vector<double> out(logits.size());
  for (std::int32_t i = 0; i < structure.rows; ++i) {
    const std::int64_t begin = structure.row_ptr[i];
    const std::int64_t end = structure.row_ptr[i + 1];
    if (begin == end) {
      throw std::invalid_argument("masked_row_softmax: empty row " + std::to_string(i));
    }
    double row_max = logits[begin];
    for (std::int64_t e = begin + 1; e < end; ++e) row_max = std::max(row_max, logits[e]);
    double denom = 0.0;
    for (std::int64_t e = begin; e < end; ++e) {
      out[e] = std::exp(logits[e] - row_max);
      denom += out[e];
    }
    for (std::int64_t e = begin; e < end; ++e) out[e] /= denom;
  }
  return out;
}

std::vector<double> masked_row_softmax_backward(const CsrMatrix& structure,
                                                const std::vector<double>& y,
                                                const std::vector<double>& gy) {
  if (y.size() != structure.val.size() || gy.size() != y.size()) {
    throw std::invalid_argument("masked_row_softmax_backward: shape mismatch");
  }
  std::vector<double> gl(y.size());
  for (std::int32_t i = 0; i < structure.rows; ++i) {
    const std::int64_t begin = structure.row_ptr[i];
    const std::int64_t end = structure.row_ptr[i + 1];
    double dot = 0.0;
    for (std::int64_t e = begin; e < end; ++e) dot += y[e] * gy[e];
    for (std::int64_t e = begin; e < end; ++e) gl[e] = y[e] * (gy[e] - dot);
  }
  return gl;
}

void adam_update(Mat& value, const Mat& grad, AdamSlots& slots, long t, const AdamConfig& cfg) {
  if (slots.m.size() == 0) slots.reset(value.rows(), value.cols());
  slots.m = cfg.beta1 * slots.m + (1.0 - cfg.beta1) * grad;
  slots.v = cfg.beta2 * slots.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const Mat m_hat = slots.m / bc1;
  const Mat v_hat = slots.v / bc2;
  value.array() -= cfg.lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
}

void sgd_update(Mat& value, const Mat& grad, double lr) { value.noalias() -= lr * grad; }

Tensor& ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate entry " + name);
  entries_.push_back({name, Tensor(rows, cols), {}});
  return entries_.back().tensor;
}

Tensor& ParamStore::at(const std::string& name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("ParamStore: no entry named " + name);
}

const Tensor& ParamStore::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("ParamStore: no entry named " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

void ParamStore::step_adam(const AdamConfig& cfg) {
  ++adam_t_;
  for (auto& e : entries_) adam_update(e.tensor.value, e.tensor.grad, e.adam, adam_t_, cfg);
}

void ParamStore::step_sgd(double lr) {
  for (auto& e : entries_) sgd_update(e.tensor.value, e.tensor.grad, lr);
}

void ParamStore::reset_optimizer() {
  adam_t_ = 0;
  for (auto& e : entries_) e.adam.reset(e.tensor.rows(), e.tensor.cols());
}

void xavier_init(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      t.value(i, j) = rng.uniform(-limit, limit);
    }
  }
  t.zero_grad();
}

ParamStore make_encoder_params(Eigen::Index in_dim, Eigen::Index hidden_dim,
                               Eigen::Index embed_dim, Rng& rng) {
  ParamStore store;
  xavier_init(store.add("W0", in_dim, hidden_dim), in_dim, hidden_dim, rng);
  xavier_init(store.add("W1", hidden_dim, embed_dim), hidden_dim, embed_dim, rng);
  xavier_init(store.add("a0", 2 * hidden_dim, 1), 2 * hidden_dim, 1, rng);
  xavier_init(store.add("a1", 2 * embed_dim, 1), 2 * embed_dim, 1, rng);
  return store;
}

double grad_check(const std::function<double()>& loss, const std::function<void()>& backward,
                  ParamStore& store, double eps, int samples_per_tensor, Rng& rng) {
  backward();  // populate analytic gradients at the current point

  // Snapshot: perturbations must not contaminate the analytic grads.
  std::vector<Mat> analytic;
  analytic.reserve(store.entries().size());
  for (const auto& e : store.entries()) analytic.push_back(e.tensor.grad);

  double worst = 0.0;
  for (std::size_t t = 0; t < store.entries().size(); ++t) {
    auto& tensor = store.entries()[t].tensor;
    const auto total = static_cast<std::size_t>(tensor.size());
    const std::size_t samples = std::min<std::size_t>(total, static_cast<std::size_t>(samples_per_tensor));

    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t flat =
          samples == total ? s : rng.index(total);
      const Eigen::Index i = static_cast<Eigen::Index>(flat) / tensor.cols();
      const Eigen::Index j = static_cast<Eigen::Index>(flat) % tensor.cols();

      const double saved = tensor.value(i, j);
      tensor.value(i, j) = saved + eps;
      const double up = loss();
      tensor.value(i, j) = saved - eps;
      const double down = loss();
      tensor.value(i, j) = saved;

      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("grad_check: non-finite loss during perturbation");
      }
      const double central = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic[t](i, j) - central) / std::max(1.0, std::abs(central));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace gatclust
