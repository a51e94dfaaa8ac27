// SPDX-License-Identifier: Apache-2.0
#include "gatclust/selftrain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace gatclust {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("self-train: " + msg);
}

// Greedy k-means++: each new center is drawn from a handful of
// D^2-weighted candidates and the one lowering the potential most wins.
Mat seed_centers(const Mat& z, int k, Rng& rng) {
  const Eigen::Index n = z.rows();
  Mat centers(k, z.cols());
  centers.row(0) = z.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));

  Vec d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (z.row(i) - centers.row(0)).squaredNorm();

  const int candidates = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (!(total > 0.0)) {
      // Every point coincides with an existing center; any pick is as good.
      centers.row(c) = z.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
      continue;
    }
    Eigen::Index best_idx = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < candidates; ++t) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      Eigen::Index idx = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > target) {
          idx = i;
          break;
        }
      }
      double potential = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        potential += std::min(d2[i], (z.row(i) - z.row(idx)).squaredNorm());
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_idx = idx;
      }
    }
    centers.row(c) = z.row(best_idx);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (z.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

double lloyd(const Mat& z, Mat& centers, int max_iters, double tol) {
  const Eigen::Index n = z.rows();
  const int k = static_cast<int>(centers.rows());
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);

  const auto assign_all = [&]() {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (z.row(i) - centers.row(0)).squaredNorm();
      for (int u = 1; u < k; ++u) {
        const double d = (z.row(i) - centers.row(u)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = u;
        }
      }
      assign[static_cast<std::size_t>(i)] = best;
      inertia += best_d;
    }
    return inertia;
  };

  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    const double inertia = assign_all();

    Mat sums = Mat::Zero(k, z.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += z.row(i);
      counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]++;
    }
    for (int u = 0; u < k; ++u) {
      if (counts[static_cast<std::size_t>(u)] > 0) {
        centers.row(u) = sums.row(u) / static_cast<double>(counts[static_cast<std::size_t>(u)]);
      }
    }
    // Re-seed empty clusters from the points farthest from their centers.
    Vec dist(n);
    bool dist_ready = false;
    for (int u = 0; u < k; ++u) {
      if (counts[static_cast<std::size_t>(u)] > 0) continue;
      if (!dist_ready) {
        for (Eigen::Index i = 0; i < n; ++i) {
          dist[i] = (z.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
        }
        dist_ready = true;
      }
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      centers.row(u) = z.row(far);
      dist[far] = -1.0;
    }

    if (iter > 0 && std::abs(prev - inertia) <= tol * std::max(prev, 1e-12)) break;
    prev = inertia;
  }
  return assign_all();
}

}  // namespace

Mat kmeans(const Mat& z, int k, const KmeansConfig& cfg, Rng& rng) {
  if (k < 1) fail("k must be positive");
  if (z.rows() < k) fail("fewer points than clusters (n < k)");
  if (cfg.restarts < 1 || cfg.max_iters < 1) fail("kmeans needs at least one restart and iteration");

  Mat best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    Mat centers = seed_centers(z, k, rng);
    const double inertia = lloyd(z, centers, cfg.max_iters, cfg.tol);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = std::move(centers);
    }
  }
  return best;
}

Mat soft_assign(const Mat& z, const Mat& mu) {
  if (mu.cols() != z.cols()) fail("centers and embedding have different widths");
  if (mu.rows() < 1) fail("no cluster centers");

  const Eigen::Index n = z.rows();
  const Eigen::Index k = mu.rows();
  Mat q(n, k);
  for (Eigen::Index u = 0; u < k; ++u) {
    const Mat diff = z.rowwise() - mu.row(u);
    q.col(u) = (1.0 / (1.0 + diff.rowwise().squaredNorm().array())).matrix();
  }
  const Vec row_sum = q.rowwise().sum();
  q.array().colwise() /= row_sum.array();
  return q;
}

Mat target_distribution(const Mat& q) {
  const Vec freq = q.colwise().sum().transpose();
  for (Eigen::Index u = 0; u < freq.size(); ++u) {
    if (!(freq[u] > 0.0)) fail("cluster frequency vanished; soft assignments must be positive");
  }
  Mat p = q.array().square().matrix();
  p.array().rowwise() /= freq.transpose().array();
  const Vec row_sum = p.rowwise().sum();
  p.array().colwise() /= row_sum.array();
  return p;
}

double clustering_loss(const Mat& p, const Mat& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) fail("P and Q shapes disagree");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index u = 0; u < p.cols(); ++u) {
      const double pv = p(i, u);
      if (pv > 0.0) loss += pv * (std::log(pv) - std::log(q(i, u)));
    }
  }
  if (!std::isfinite(loss)) fail("non-finite clustering loss");
  return loss;
}

double clustering_loss_grads(const Mat& z, const Mat& mu, const Mat& q, const Mat& p,
                             double scale, Mat& gz, Mat& gmu) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = mu.rows();
  if (q.rows() != n || q.cols() != k || p.rows() != n || p.cols() != k) {
    fail("Q/P shapes do not match Z and mu");
  }
  if (gz.rows() != n || gz.cols() != z.cols() || gmu.rows() != k || gmu.cols() != mu.cols()) {
    fail("gradient buffers have the wrong shape");
  }

  // coef_iu = 2 * (1 + ||z_i - mu_u||^2)^{-1} * (p_iu - q_iu); then
  // dL/dz_i = sum_u coef_iu (z_i - mu_u) and dL/dmu_u = -sum_i of the same.
  Mat coef(n, k);
  for (Eigen::Index u = 0; u < k; ++u) {
    const Mat diff = z.rowwise() - mu.row(u);
    coef.col(u) = (2.0 / (1.0 + diff.rowwise().squaredNorm().array())).matrix();
  }
  coef = coef.cwiseProduct(p - q);

  const Vec row_sum = coef.rowwise().sum();
  gz.noalias() += scale * (row_sum.asDiagonal() * z - coef * mu);
  const Vec col_sum = coef.colwise().sum().transpose();
  gmu.noalias() += scale * (col_sum.asDiagonal() * mu - coef.transpose() * z);

  return clustering_loss(p, q);
}

std::vector<std::int32_t> hard_labels(const Mat& q) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index u = 1; u < q.cols(); ++u) {
      if (q(i, u) > q(i, best)) best = u;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
  }
  return out;
}

bool rows_are_distributions(const Mat& m, double tol) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!(v >= 0.0)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

void save_labels(const std::string& path, const std::vector<std::int32_t>& labels) {
  std::ofstream out(path);
  if (!out) fail("cannot write label file " + path);
  for (std::int32_t v : labels) out << v << '\n';
  if (!out) fail("failed while writing label file " + path);
}

std::vector<std::int32_t> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open label file " + path);
  std::vector<std::int32_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(line, &pos);
    } catch (const std::exception&) {
      fail("bad label at " + path + ":" + std::to_string(lineno));
    }
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos != line.size()) fail("bad label at " + path + ":" + std::to_string(lineno));
    out.push_back(static_cast<std::int32_t>(v));
  }
  if (out.empty()) fail("label file " + path + " is empty");
  return out;
}

void save_distribution(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) fail("cannot write distribution file " + path);
  out.precision(17);
  out << m.rows() << '\t' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << m(i, j) << (j + 1 == m.cols() ? '\n' : '\t');
    }
  }
  if (!out) fail("failed while writing distribution file " + path);
}

}  // namespace gatclust
