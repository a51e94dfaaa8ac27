// SPDX-License-Identifier: Apache-2.0
#include "gatclust/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gatclust {

namespace {

using Arr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("gat-autoencoder: " + msg);
}

// Attribute matrices denser than this stay on the Eigen GEMM path.
constexpr double kSparseAttrCutoff = 0.05;
constexpr Eigen::Index kDecodeBlockRows = 256;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// out(i,:) = sum over support entries e=(i,j) of alpha[e] * hw(j,:).
void aggregate(const CsrMatrix& s, const std::vector<double>& alpha, const Mat& hw, Mat& out) {
  out.setZero(s.rows, hw.cols());
  for (std::int32_t i = 0; i < s.rows; ++i) {
    auto row = out.row(i);
    for (std::int64_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      row.noalias() += alpha[e] * hw.row(s.col[e]);
    }
  }
}

// out(j,:) += sum over support entries e=(i,j) of alpha[e] * d(i,:).
void aggregate_transpose_add(const CsrMatrix& s, const CsrTransposeIndex& tx,
                             const std::vector<double>& alpha, const Mat& d, Mat& out) {
  for (std::int32_t j = 0; j < s.cols; ++j) {
    auto row = out.row(j);
    for (std::int64_t p = tx.col_ptr[j]; p < tx.col_ptr[j + 1]; ++p) {
      row.noalias() += alpha[tx.entry[p]] * d.row(tx.src_row[p]);
    }
  }
}

// dalpha[e] = a.row(i) . b.row(j) for support entry e=(i,j).
std::vector<double> edge_row_dots(const CsrMatrix& s, const Mat& a, const Mat& b) {
  std::vector<double> out(s.val.size());
  for (std::int32_t i = 0; i < s.rows; ++i) {
    for (std::int64_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      out[e] = a.row(i).dot(b.row(s.col[e]));
    }
  }
  return out;
}

}  // namespace

SigmaMode sigma_mode_from_string(const std::string& s) {
  if (s == "lrelu-identity") return SigmaMode::LReluIdentity;
  if (s == "lrelu-lrelu") return SigmaMode::LReluLRelu;
  if (s == "identity-identity") return SigmaMode::IdentityIdentity;
  fail("unknown sigma mode '" + s + "'");
}

std::string to_string(SigmaMode m) {
  switch (m) {
    case SigmaMode::LReluIdentity: return "lrelu-identity";
    case SigmaMode::LReluLRelu: return "lrelu-lrelu";
    case SigmaMode::IdentityIdentity: return "identity-identity";
  }
  fail("corrupt sigma mode");
}

AttentionMode attention_mode_from_string(const std::string& s) {
  if (s == "per-layer") return AttentionMode::PerLayer;
  if (s == "shared-input") return AttentionMode::SharedInput;
  fail("unknown attention mode '" + s + "'");
}

std::string to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::PerLayer: return "per-layer";
    case AttentionMode::SharedInput: return "shared-input";
  }
  fail("corrupt attention mode");
}

GatAutoencoder::GatAutoencoder(const Graph& g, const ProximityMatrix& prox, EncoderConfig cfg,
                               ParamStore& store)
    : g_(g), prox_(prox), cfg_(cfg), store_(store) {
  if (prox_.n() != g_.n) fail("proximity matrix does not match the graph size");
  if (!(cfg_.slope > 0.0 && cfg_.slope < 1.0)) fail("slope must be in (0, 1)");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (cfg_.hidden_dim < 1 || cfg_.embed_dim < 1) fail("layer widths must be positive");

  const Eigen::Index m = g_.attributes.cols();
  const auto check = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    if (!store_.contains(name)) fail(std::string(name) + " missing from the parameter store");
    const Tensor& t = store_.at(name);
    if (t.rows() != rows || t.cols() != cols) {
      fail(std::string(name) + " has the wrong shape");
    }
  };
  check("W0", m, cfg_.hidden_dim);
  check("W1", cfg_.hidden_dim, cfg_.embed_dim);
  check("a0", 2 * cfg_.hidden_dim, 1);
  check("a1", 2 * cfg_.embed_dim, 1);

  ones_ = 2 * g_.edge_count();
  if (ones_ > 0) {
    const double nn = static_cast<double>(g_.n) * static_cast<double>(g_.n);
    w_pos_ = (nn - static_cast<double>(ones_)) / static_cast<double>(ones_);
  }

  std::int64_t nonzero = 0;
  for (Eigen::Index i = 0; i < g_.attributes.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (g_.attributes(i, j) != 0.0) ++nonzero;
    }
  }
  const double total = static_cast<double>(g_.attributes.size());
  if (total > 0 && static_cast<double>(nonzero) / total <= kSparseAttrCutoff) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(nonzero));
    for (Eigen::Index i = 0; i < g_.attributes.rows(); ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double v = g_.attributes(i, j);
        if (v != 0.0) {
          trips.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), v});
        }
      }
    }
    x_sparse_ = csr_from_triplets(g_.n, static_cast<std::int32_t>(m), std::move(trips));
    use_sparse_x_ = true;
  }
}

bool GatAutoencoder::dropout_active() const {
  return training_ && cfg_.dropout > 0.0 && dropout_mask_.size() > 0;
}

void GatAutoencoder::begin_step(Rng& rng) {
  if (training_ && cfg_.dropout > 0.0) {
    const double keep_scale = 1.0 / (1.0 - cfg_.dropout);
    dropout_mask_.resize(g_.n, cfg_.hidden_dim);
    for (Eigen::Index i = 0; i < dropout_mask_.rows(); ++i) {
      for (Eigen::Index j = 0; j < dropout_mask_.cols(); ++j) {
        dropout_mask_(i, j) = rng.uniform() >= cfg_.dropout ? keep_scale : 0.0;
      }
    }
  }
  if (cfg_.sampled_loss) {
    sampled_negatives_.clear();
    sampled_negatives_.reserve(static_cast<std::size_t>(ones_));
    const auto n = static_cast<std::size_t>(g_.n);
    while (sampled_negatives_.size() < static_cast<std::size_t>(ones_)) {
      const auto i = static_cast<std::int32_t>(rng.index(n));
      const auto j = static_cast<std::int32_t>(rng.index(n));
      if (!g_.has_edge(i, j)) sampled_negatives_.emplace_back(i, j);
    }
  }
}

std::vector<double> GatAutoencoder::attention_from_hw(const Mat& hw, const Mat& a, Vec& s,
                                                      Vec& r,
                                                      std::vector<double>& cm) const {
  const Eigen::Index d = hw.cols();
  s.noalias() = hw * a.topRows(d);
  r.noalias() = hw * a.bottomRows(d);

  const CsrMatrix& m = prox_.m;
  cm.resize(m.val.size());
  std::vector<double> lk(m.val.size());
  for (std::int32_t i = 0; i < m.rows; ++i) {
    for (std::int64_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) {
      const double c = m.val[e] * (s[i] + r[m.col[e]]);
      cm[e] = c;
      lk[e] = c > 0.0 ? c : cfg_.slope * c;
    }
  }
  return masked_row_softmax(m, lk);
}

std::vector<double> GatAutoencoder::attention_coefficients(const Mat& input, const Mat& w,
                                                           const Mat& a, Vec& s, Vec& r,
                                                           std::vector<double>& cm) const {
  const Mat hw = matmul(input, w);
  return attention_from_hw(hw, a, s, r, cm);
}

const Mat& GatAutoencoder::forward() {
  const Mat& w0 = store_.at("W0").value;
  const Mat& w1 = store_.at("W1").value;
  const Mat& a0 = store_.at("a0").value;
  const Mat& a1 = store_.at("a1").value;

  if (use_sparse_x_) {
    csr_times_dense(x_sparse_, w0, hw0_);
  } else {
    hw0_.resize(g_.n, cfg_.hidden_dim);
    hw0_.noalias() = g_.attributes * w0;
  }
  alpha0_ = attention_from_hw(hw0_, a0, s0_, r0_, cm0_);
  aggregate(prox_.m, alpha0_, hw0_, agg0_);

  const bool hidden_lrelu = cfg_.sigma != SigmaMode::IdentityIdentity;
  h1_ = hidden_lrelu ? leaky_relu(agg0_, cfg_.slope) : agg0_;
  if (dropout_active()) h1d_ = h1_.cwiseProduct(dropout_mask_);

  const Mat& h_in = layer2_input();
  hw1_.resize(g_.n, cfg_.embed_dim);
  hw1_.noalias() = h_in * w1;
  if (cfg_.attention == AttentionMode::PerLayer) {
    alpha1_ = attention_from_hw(hw1_, a1, s1_, r1_, cm1_);
  } else {
    alpha1_ = alpha0_;
  }
  aggregate(prox_.m, alpha1_, hw1_, agg1_);

  const bool final_lrelu = cfg_.sigma == SigmaMode::LReluLRelu;
  z_ = final_lrelu ? leaky_relu(agg1_, cfg_.slope) : agg1_;
  if (!all_finite(z_)) fail("non-finite embedding after forward");
  return z_;
}

EncoderOutput GatAutoencoder::output() const {
  if (z_.size() == 0) fail("output requested before forward");
  return {h1_, z_, alpha0_, alpha1_};
}

Mat GatAutoencoder::decode() const {
  if (z_.size() == 0) fail("decode requested before forward");
  Mat scores(g_.n, g_.n);
  scores.noalias() = z_ * z_.transpose();
  return sigmoid(scores);
}

double GatAutoencoder::recon_impl(Mat* dz) const {
  if (z_.size() == 0) fail("reconstruction loss requested before forward");
  if (ones_ == 0) fail("reconstruction loss undefined on a graph with no edges");

  if (cfg_.sampled_loss) {
    if (sampled_negatives_.empty()) fail("sampled loss requires begin_step to draw negatives");
    const double count =
        static_cast<double>(ones_) + static_cast<double>(sampled_negatives_.size());
    double loss = 0.0;
    for (const auto& [i, j] : g_.edges) {
      const double s = z_.row(i).dot(z_.row(j));
      loss += 2.0 * softplus(-s);
      if (dz) {
        const double grad = 2.0 * (stable_sigmoid(s) - 1.0) / count;
        dz->row(i) += grad * z_.row(j);
        dz->row(j) += grad * z_.row(i);
      }
    }
    for (const auto& [i, j] : sampled_negatives_) {
      const double s = z_.row(i).dot(z_.row(j));
      loss += softplus(s);
      if (dz) {
        const double grad = stable_sigmoid(s) / count;
        dz->row(i) += grad * z_.row(j);
        dz->row(j) += grad * z_.row(i);
      }
    }
    return loss / count;
  }

  const double nn = static_cast<double>(g_.n) * static_cast<double>(g_.n);
  double base = 0.0;
  double adjust = 0.0;
  Mat sblk;
  Mat gblk;
  for (Eigen::Index r0 = 0; r0 < g_.n; r0 += kDecodeBlockRows) {
    const Eigen::Index b = std::min<Eigen::Index>(kDecodeBlockRows, g_.n - r0);
    sblk.resize(b, g_.n);
    sblk.noalias() = z_.middleRows(r0, b) * z_.transpose();

    const Arr u = (-sblk.array().abs()).exp();
    base += (sblk.array().max(0.0) + u.log1p()).sum();

    if (dz) {
      gblk = ((sblk.array() >= 0.0).select(1.0 / (1.0 + u), u / (1.0 + u)) / nn).matrix();
    }
    for (Eigen::Index i = r0; i < r0 + b; ++i) {
      for (std::int32_t j : g_.adjacency[static_cast<std::size_t>(i)]) {
        const double s = sblk(i - r0, j);
        adjust += w_pos_ * softplus(-s) - softplus(s);
        if (dz) gblk(i - r0, j) = w_pos_ * (stable_sigmoid(s) - 1.0) / nn;
      }
    }
    if (dz) dz->middleRows(r0, b).noalias() += 2.0 * (gblk * z_);
  }
  return (base + adjust) / nn;
}

double GatAutoencoder::reconstruction_loss() const { return recon_impl(nullptr); }

double GatAutoencoder::reconstruction_loss_and_grad(Mat& dz) const {
  if (dz.rows() != g_.n || dz.cols() != cfg_.embed_dim) {
    fail("reconstruction gradient buffer has the wrong shape");
  }
  return recon_impl(&dz);
}

void GatAutoencoder::attention_backward(const std::vector<double>& alpha,
                                        const std::vector<double>& cm, const Mat& hw,
                                        const Mat& a_value, const std::vector<double>& dalpha,
                                        Mat& dhw, Mat& ga) {
  const std::vector<double> dlk = masked_row_softmax_backward(prox_.m, alpha, dalpha);

  const CsrMatrix& m = prox_.m;
  Vec ds = Vec::Zero(m.rows);
  Vec dr = Vec::Zero(m.rows);
  for (std::int32_t i = 0; i < m.rows; ++i) {
    for (std::int64_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) {
      const double dcm = dlk[e] * (cm[e] > 0.0 ? 1.0 : cfg_.slope);
      const double dc = dcm * m.val[e];
      ds[i] += dc;
      dr[m.col[e]] += dc;
    }
  }

  const Eigen::Index d = hw.cols();
  dhw.noalias() += ds * a_value.topRows(d).transpose();
  dhw.noalias() += dr * a_value.bottomRows(d).transpose();
  ga.topRows(d).noalias() += hw.transpose() * ds;
  ga.bottomRows(d).noalias() += hw.transpose() * dr;
}

void GatAutoencoder::backward(const Mat& dz) {
  if (z_.size() == 0) fail("backward requested before forward");
  if (dz.rows() != g_.n || dz.cols() != cfg_.embed_dim) {
    fail("embedding gradient has the wrong shape");
  }

  Tensor& w0 = store_.at("W0");
  Tensor& w1 = store_.at("W1");
  Tensor& a0 = store_.at("a0");
  Tensor& a1 = store_.at("a1");

  const bool final_lrelu = cfg_.sigma == SigmaMode::LReluLRelu;
  const Mat dagg1 = final_lrelu ? leaky_relu_backward(agg1_, dz, cfg_.slope) : dz;

  std::vector<double> dalpha1 = edge_row_dots(prox_.m, dagg1, hw1_);
  Mat dhw1 = Mat::Zero(g_.n, cfg_.embed_dim);
  aggregate_transpose_add(prox_.m, prox_.m_transpose, alpha1_, dagg1, dhw1);
  if (cfg_.attention == AttentionMode::PerLayer) {
    attention_backward(alpha1_, cm1_, hw1_, a1.value, dalpha1, dhw1, a1.grad);
  }

  Mat dh1 = Mat::Zero(g_.n, cfg_.hidden_dim);
  matmul_backward(layer2_input(), w1.value, dhw1, &dh1, &w1.grad);
  if (dropout_active()) dh1 = dh1.cwiseProduct(dropout_mask_);

  const bool hidden_lrelu = cfg_.sigma != SigmaMode::IdentityIdentity;
  const Mat dagg0 = hidden_lrelu ? leaky_relu_backward(agg0_, dh1, cfg_.slope) : dh1;

  std::vector<double> dalpha0 = edge_row_dots(prox_.m, dagg0, hw0_);
  if (cfg_.attention == AttentionMode::SharedInput) {
    for (std::size_t e = 0; e < dalpha0.size(); ++e) dalpha0[e] += dalpha1[e];
  }
  Mat dhw0 = Mat::Zero(g_.n, cfg_.hidden_dim);
  aggregate_transpose_add(prox_.m, prox_.m_transpose, alpha0_, dagg0, dhw0);
  attention_backward(alpha0_, cm0_, hw0_, a0.value, dalpha0, dhw0, a0.grad);

  if (use_sparse_x_) {
    csr_transpose_times_dense_add(x_sparse_, dhw0, w0.grad);
  } else {
    w0.grad.noalias() += g_.attributes.transpose() * dhw0;
  }
}

void GatAutoencoder::export_embedding(const std::string& path) const {
  if (z_.size() == 0) fail("embedding export requested before forward");
  std::ofstream out(path);
  if (!out) fail("cannot write embedding file " + path);
  out.precision(17);
  out << z_.rows() << '\t' << z_.cols() << '\n';
  for (Eigen::Index i = 0; i < z_.rows(); ++i) {
    for (Eigen::Index j = 0; j < z_.cols(); ++j) {
      out << z_(i, j) << (j + 1 == z_.cols() ? '\n' : '\t');
    }
  }
  if (!out) fail("failed while writing embedding file " + path);
}

}  // namespace gatclust
