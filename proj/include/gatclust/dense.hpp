// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gatclust {

// Row-major everywhere: tensors serialize as flat row-major doubles.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// A value matrix with a same-shape gradient accumulator.
struct Tensor {
  Mat value;
  Mat grad;

  Tensor() = default;
  Tensor(Eigen::Index rows, Eigen::Index cols)
      : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
  explicit Tensor(Mat v) : value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace gatclust
