#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "webcorpus/matrix.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

struct TsneConfig {
  double perplexity = 30;
  size_t output_dim = 2;
  size_t iterations = 1000;
  double learning_rate = 200;
  double early_exaggeration = 4;
  size_t exaggeration_iters = 100;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  size_t momentum_switch_iter = 250;
  uint64_t seed = 0;

  void validate(size_t n) const {
    if (perplexity <= 1 || perplexity >= double(n))
      throw Error("tsne: perplexity must satisfy 1 < perplexity < n");
    if (iterations < 1) throw Error("tsne: iterations must be >= 1");
    if (output_dim < 1) throw Error("tsne: output_dim must be >= 1");
    if (learning_rate <= 0) throw Error("tsne: learning rate must be positive");
  }
};

struct EmbeddingResult {
  Matrix y;                       // n x output_dim
  std::vector<double> kl_trace;   // objective value at the start of each iteration
};

namespace detail {

inline Matrix squared_distances(const Matrix& X) {
  Matrix D(X.rows(), X.rows());
  for (size_t i = 0; i < X.rows(); ++i)
    for (size_t j = i + 1; j < X.rows(); ++j) {
      double d = squared_distance(X.row(i), X.row(j));
      D(i, j) = d;
      D(j, i) = d;
    }
  return D;
}

// Shannon entropy (bits) and probabilities of row i under precision beta.
inline double row_entropy_bits(const Matrix& D, size_t i, double beta, std::vector<double>& p) {
  size_t n = D.rows();
  double sum = 0;
  for (size_t j = 0; j < n; ++j) {
    p[j] = j == i ? 0.0 : std::exp(-beta * D(i, j));
    sum += p[j];
  }
  if (sum < std::numeric_limits<double>::min()) {
    // All mass vanished (huge beta); fall back to the nearest neighbour.
    std::fill(p.begin(), p.end(), 0.0);
    size_t nearest = i == 0 ? 1 : 0;
    for (size_t j = 0; j < n; ++j)
      if (j != i && D(i, j) < D(i, nearest)) nearest = j;
    p[nearest] = 1.0;
    return 0.0;
  }
  double entropy_nats = 0;
  for (size_t j = 0; j < n; ++j) {
    p[j] /= sum;
    if (p[j] > 0) entropy_nats -= p[j] * std::log(p[j]);
  }
  return entropy_nats / std::numbers::ln2;
}

}  // namespace detail

// Row-stochastic conditional affinities: per-point precision found by binary
// search so each row's entropy equals log2(perplexity).
inline Matrix conditional_affinities(const Matrix& X, double perplexity) {
  size_t n = X.rows();
  TsneConfig probe;
  probe.perplexity = perplexity;
  probe.validate(n);
  if (double(n) < 3 * perplexity)
    log(LogLevel::warn, "tsne: n = " + std::to_string(n) + " is below 3x perplexity");
  Matrix D = detail::squared_distances(X);
  Matrix P(n, n);
  double target_bits = std::log2(perplexity);
  std::vector<double> p(n);
  for (size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();
    for (size_t iter = 0; iter < 256; ++iter) {
      double diff = detail::row_entropy_bits(D, i, beta, p) - target_bits;
      if (std::abs(diff) < 1e-9) break;
      if (diff > 0) {
        beta_min = beta;
        beta = std::isinf(beta_max) ? beta * 2 : 0.5 * (beta + beta_max);
      } else {
        beta_max = beta;
        beta = std::isinf(beta_min) ? beta / 2 : 0.5 * (beta + beta_min);
      }
    }
    detail::row_entropy_bits(D, i, beta, p);
    for (size_t j = 0; j < n; ++j) P(i, j) = p[j];
  }
  return P;
}

// Symmetrised joint affinities: (P + P^T) / 2n, summing to 1 overall.
inline Matrix compute_affinities(const Matrix& X, double perplexity) {
  Matrix P = conditional_affinities(X, perplexity);
  size_t n = P.rows();
  Matrix joint(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) joint(i, j) = (P(i, j) + P(j, i)) / (2.0 * double(n));
  return joint;
}

inline EmbeddingResult tsne_embed(const Matrix& X, const TsneConfig& config) {
  size_t n = X.rows();
  config.validate(n);
  constexpr double kEps = 1e-12;
  Matrix P = compute_affinities(X, config.perplexity);

  EmbeddingResult result;
  result.y = Matrix(n, config.output_dim);
  Rng rng(config.seed);
  for (size_t i = 0; i < n; ++i)
    for (size_t c = 0; c < config.output_dim; ++c) result.y(i, c) = rng.normal() * 1e-4;

  Matrix velocity(n, config.output_dim);
  Matrix gains(n, config.output_dim, 1.0);
  Matrix num(n, n);
  Matrix gradient(n, config.output_dim);

  for (size_t iter = 0; iter < config.iterations; ++iter) {
    // Student-t kernel numerators and the normaliser.
    double num_sum = 0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        double q = 1.0 / (1.0 + squared_distance(result.y.row(i), result.y.row(j)));
        num(i, j) = q;
        num(j, i) = q;
        num_sum += 2 * q;
      }
    num_sum = std::max(num_sum, kEps);

    double kl = 0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double pij = std::max(P(i, j), kEps);
        double qij = std::max(num(i, j) / num_sum, kEps);
        kl += pij * std::log(pij / qij);
      }
    result.kl_trace.push_back(kl);

    double exaggeration = iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t c = 0; c < config.output_dim; ++c) gradient(i, c) = 0;
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double qij = std::max(num(i, j) / num_sum, kEps);
        double coeff = 4.0 * (exaggeration * P(i, j) - qij) * num(i, j);
        for (size_t c = 0; c < config.output_dim; ++c)
          gradient(i, c) += coeff * (result.y(i, c) - result.y(j, c));
      }
    }

    double momentum =
        iter < config.momentum_switch_iter ? config.initial_momentum : config.final_momentum;
    for (size_t i = 0; i < n; ++i)
      for (size_t c = 0; c < config.output_dim; ++c) {
        bool same_sign = (gradient(i, c) > 0) == (velocity(i, c) > 0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        velocity(i, c) =
            momentum * velocity(i, c) - config.learning_rate * gains(i, c) * gradient(i, c);
        result.y(i, c) += velocity(i, c);
      }

    for (size_t c = 0; c < config.output_dim; ++c) {
      double mean = 0;
      for (size_t i = 0; i < n; ++i) mean += result.y(i, c);
      mean /= double(n);
      for (size_t i = 0; i < n; ++i) result.y(i, c) -= mean;
    }
  }
  return result;
}

}  // namespace webcorpus
