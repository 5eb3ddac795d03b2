#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "webcorpus/matrix.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

struct PcaModel {
  std::vector<double> mean;                 // d
  Matrix components;                        // k x d, orthonormal rows, descending variance
  std::vector<double> explained_variance;   // k

  Matrix transform(const Matrix& X) const {
    if (X.cols() != mean.size()) throw Error("pca transform: dimension mismatch");
    size_t k = components.rows();
    Matrix out(X.rows(), k);
    for (size_t i = 0; i < X.rows(); ++i)
      for (size_t c = 0; c < k; ++c) {
        double s = 0;
        for (size_t j = 0; j < mean.size(); ++j) s += (X(i, j) - mean[j]) * components(c, j);
        out(i, c) = s;
      }
    return out;
  }

  Matrix inverse_transform(const Matrix& Y) const {
    if (Y.cols() != components.rows()) throw Error("pca inverse: dimension mismatch");
    Matrix out(Y.rows(), mean.size());
    for (size_t i = 0; i < Y.rows(); ++i)
      for (size_t j = 0; j < mean.size(); ++j) {
        double s = mean[j];
        for (size_t c = 0; c < components.rows(); ++c) s += Y(i, c) * components(c, j);
        out(i, j) = s;
      }
    return out;
  }
};

struct PcaResult {
  PcaModel model;
  Matrix projection;  // n x k
};

// Mean-centred projection onto the top-k eigenvectors of the sample
// covariance. Each component is oriented so its largest-magnitude coordinate
// is positive (first such coordinate wins on magnitude ties).
inline PcaResult pca_fit_transform(const Matrix& X, size_t k) {
  size_t n = X.rows(), d = X.cols();
  if (n < 2) throw Error("pca: need at least 2 rows");
  if (k < 1 || k > std::min(n, d)) throw Error("pca: k out of range");

  PcaResult result;
  result.model.mean.assign(d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) result.model.mean[j] += X(i, j);
  for (double& m : result.model.mean) m /= double(n);

  Eigen::MatrixXd centred(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) centred(long(i), long(j)) = X(i, j) - result.model.mean[j];
  Eigen::MatrixXd cov = (centred.transpose() * centred) / double(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");
  // Eigen reports ascending eigenvalues; take the top k from the back.
  result.model.components = Matrix(k, d);
  result.model.explained_variance.resize(k);
  for (size_t c = 0; c < k; ++c) {
    long col = long(d - 1 - c);
    result.model.explained_variance[c] = std::max(0.0, solver.eigenvalues()(col));
    size_t pivot = 0;
    double best = -1;
    for (size_t j = 0; j < d; ++j) {
      double mag = std::abs(solver.eigenvectors()(long(j), col));
      if (mag > best) {
        best = mag;
        pivot = j;
      }
    }
    double sign = solver.eigenvectors()(long(pivot), col) < 0 ? -1.0 : 1.0;
    for (size_t j = 0; j < d; ++j)
      result.model.components(c, j) = sign * solver.eigenvectors()(long(j), col);
  }
  result.projection = result.model.transform(X);
  return result;
}

}  // namespace webcorpus
