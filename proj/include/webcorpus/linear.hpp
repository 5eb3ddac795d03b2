#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "webcorpus/features.hpp"
#include "webcorpus/matrix.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

// Max-subtracted softmax; safe for any finite input.
inline std::vector<double> softmax(const std::vector<double>& z) {
  if (z.empty()) throw Error("softmax of empty vector");
  double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline double activation_logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double activation_tanh(double x) { return std::tanh(x); }

enum class Activation { tanh_fn, logistic };

inline double activation(Activation kind, double x) {
  return kind == Activation::tanh_fn ? activation_tanh(x) : activation_logistic(x);
}

// 1 iff w.x + b > 0, strictly; the boundary maps to 0.
inline int perceptron_predict(std::span<const double> w, double b, std::span<const double> x) {
  if (w.size() != x.size()) throw Error("perceptron_predict: dimension mismatch");
  double s = b;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s > 0 ? 1 : 0;
}

enum class PairwiseLoss { logistic, hinge };

inline std::string to_string(PairwiseLoss loss) {
  return loss == PairwiseLoss::logistic ? "logistic" : "hinge";
}

struct TrainConfig {
  double alpha0 = 0.01;
  size_t epochs = 30;
  size_t decay_every = 10;
  double gamma = 0.1;
  uint64_t seed = 0;
  double l2 = 0.0;
  PairwiseLoss loss = PairwiseLoss::logistic;

  // alpha0 = 0 is admitted so the "zero rate is the identity" property is
  // expressible; the CLI validates alpha0 > 0 separately.
  void validate() const {
    if (alpha0 < 0) throw Error("alpha0 must be >= 0");
    if (gamma <= 0 || gamma > 1) throw Error("gamma must be in (0, 1]");
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (decay_every < 1) throw Error("decay_every must be >= 1");
    if (l2 < 0) throw Error("l2 must be >= 0");
  }
};

// alpha0 * gamma^floor(epoch / decay_every), computed by repeated
// multiplication so the pre-decay epochs return alpha0 exactly.
inline double lr_schedule(const TrainConfig& config, size_t epoch) {
  double factor = 1.0;
  for (size_t i = 0; i < epoch / config.decay_every; ++i) factor *= config.gamma;
  return config.alpha0 * factor;
}

struct LinearModel {
  Matrix W;               // C x d
  std::vector<double> b;  // C

  LinearModel() = default;
  LinearModel(size_t classes, size_t dim) : W(classes, dim), b(classes, 0.0) {}

  size_t classes() const { return W.rows(); }
  size_t dim() const { return W.cols(); }

  std::vector<double> scores(std::span<const double> x) const {
    if (x.size() != dim()) throw Error("score: dimension mismatch");
    std::vector<double> s(classes());
    for (size_t c = 0; c < classes(); ++c) s[c] = dot(W.row(c), x) + b[c];
    return s;
  }

  // Argmax with ties to the lowest class index.
  size_t predict(std::span<const double> x) const {
    auto s = scores(x);
    return size_t(std::max_element(s.begin(), s.end()) - s.begin());
  }

  Matrix score_matrix(const Matrix& X) const {
    Matrix out(X.rows(), classes());
    for (size_t i = 0; i < X.rows(); ++i) {
      auto s = scores(X.row(i));
      for (size_t c = 0; c < classes(); ++c) out(i, c) = s[c];
    }
    return out;
  }
};

// Mean cross-entropy of softmax(Wx+b) plus 0.5*l2*||W||^2, computed via
// log-sum-exp for stability.
inline double softmax_loss(const Matrix& X, const std::vector<size_t>& y, const LinearModel& model,
                           double l2 = 0) {
  double total = 0;
  for (size_t i = 0; i < X.rows(); ++i) {
    auto s = model.scores(X.row(i));
    double m = *std::max_element(s.begin(), s.end());
    double lse = 0;
    for (double v : s) lse += std::exp(v - m);
    total += m + std::log(lse) - s[y[i]];
  }
  double loss = total / double(X.rows());
  if (l2 > 0) {
    double norm2 = 0;
    for (size_t c = 0; c < model.classes(); ++c)
      for (double w : model.W.row(c)) norm2 += w * w;
    loss += 0.5 * l2 * norm2;
  }
  return loss;
}

struct SoftmaxGradient {
  Matrix dW;
  std::vector<double> db;
};

// Full-batch analytic gradient of softmax_loss at the given parameters.
inline SoftmaxGradient softmax_gradient(const Matrix& X, const std::vector<size_t>& y,
                                        const LinearModel& model, double l2 = 0) {
  SoftmaxGradient g{Matrix(model.classes(), model.dim()), std::vector<double>(model.classes(), 0.0)};
  for (size_t i = 0; i < X.rows(); ++i) {
    auto p = softmax(model.scores(X.row(i)));
    p[y[i]] -= 1.0;
    auto xi = X.row(i);
    for (size_t c = 0; c < model.classes(); ++c) {
      for (size_t j = 0; j < model.dim(); ++j) g.dW(c, j) += p[c] * xi[j];
      g.db[c] += p[c];
    }
  }
  double inv_n = 1.0 / double(X.rows());
  for (size_t c = 0; c < model.classes(); ++c) {
    for (size_t j = 0; j < model.dim(); ++j)
      g.dW(c, j) = g.dW(c, j) * inv_n + l2 * model.W(c, j);
    g.db[c] *= inv_n;
  }
  return g;
}

struct TrainResult {
  LinearModel model;
  std::vector<double> epoch_losses;  // full-set loss measured after each epoch
  double final_loss = 0;
};

inline size_t count_classes(const std::vector<size_t>& y) {
  size_t n = 0;
  for (size_t v : y) n = std::max(n, v + 1);
  return n;
}

// Per-sample SGD on the softmax cross-entropy, zero-initialized, samples
// shuffled each epoch from the config seed.
inline TrainResult train_softmax(const Matrix& X, const std::vector<size_t>& y, size_t n_classes,
                                 const TrainConfig& config) {
  config.validate();
  if (X.rows() == 0) throw Error("train_softmax: empty input");
  if (X.rows() != y.size()) throw Error("train_softmax: label count mismatch");
  std::vector<size_t> per_class(n_classes, 0);
  for (size_t v : y) {
    if (v >= n_classes) throw Error("train_softmax: label out of range");
    ++per_class[v];
  }
  size_t classes_present = n_classes - size_t(std::count(per_class.begin(), per_class.end(), size_t{0}));
  if (classes_present < 2) throw Error("train_softmax: need at least 2 classes present");

  TrainResult result;
  result.model = LinearModel(n_classes, X.cols());
  std::vector<size_t> order(X.rows());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(config.seed);
  std::vector<double> p;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = lr_schedule(config, epoch);
    rng.shuffle(order);
    for (size_t i : order) {
      p = softmax(result.model.scores(X.row(i)));
      p[y[i]] -= 1.0;
      auto xi = X.row(i);
      for (size_t c = 0; c < n_classes; ++c) {
        double coeff = lr * p[c];
        for (size_t j = 0; j < X.cols(); ++j) {
          double w = result.model.W(c, j);
          result.model.W(c, j) = w - coeff * xi[j] - lr * config.l2 * w;
        }
        result.model.b[c] -= coeff;
      }
    }
    result.epoch_losses.push_back(softmax_loss(X, y, result.model, config.l2));
  }
  result.final_loss = result.epoch_losses.back();
  return result;
}

inline TrainResult train_softmax(const FeatureTable& table, const TrainConfig& config) {
  LabelCodec codec = LabelCodec::fit(table);
  return train_softmax(table.matrix(), codec.encode_all(table), codec.classes.size(), config);
}

// Binary hinge-loss subgradient descent (labels -1/+1), reported in the same
// two-row shape as a K=2 softmax model so prediction code is shared.
inline LinearModel train_hinge_pair(const Matrix& X, const std::vector<size_t>& y,
                                    const TrainConfig& config) {
  config.validate();
  std::vector<double> w(X.cols(), 0.0);
  double bias = 0;
  std::vector<size_t> order(X.rows());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(config.seed);
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = lr_schedule(config, epoch);
    rng.shuffle(order);
    for (size_t i : order) {
      double t = y[i] == 1 ? 1.0 : -1.0;
      auto xi = X.row(i);
      double margin = t * (dot(std::span<const double>(w), xi) + bias);
      if (config.l2 > 0)
        for (double& v : w) v -= lr * config.l2 * v;
      if (margin < 1) {
        for (size_t j = 0; j < w.size(); ++j) w[j] += lr * t * xi[j];
        bias += lr * t;
      }
    }
  }
  LinearModel model(2, X.cols());
  for (size_t j = 0; j < w.size(); ++j) {
    model.W(0, j) = -0.5 * w[j];
    model.W(1, j) = 0.5 * w[j];
  }
  model.b = {-0.5 * bias, 0.5 * bias};
  return model;
}

struct OneVsOneModel {
  struct Pair {
    size_t a = 0, b = 0;  // class indices, a < b; model row 0 scores a, row 1 scores b
    LinearModel model;
  };
  size_t n_classes = 0;
  std::vector<Pair> pairs;
};

// One binary learner per unordered class pair, each trained on that pair's
// samples only.
inline OneVsOneModel train_one_vs_one(const Matrix& X, const std::vector<size_t>& y,
                                      size_t n_classes, const TrainConfig& config) {
  config.validate();
  if (n_classes < 2) throw Error("train_one_vs_one: need at least 2 classes");
  if (X.rows() != y.size()) throw Error("train_one_vs_one: label count mismatch");
  std::vector<std::vector<size_t>> members(n_classes);
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= n_classes) throw Error("train_one_vs_one: label out of range");
    members[y[i]].push_back(i);
  }
  for (size_t c = 0; c < n_classes; ++c)
    if (members[c].empty())
      throw Error("train_one_vs_one: class " + std::to_string(c) + " has no samples");

  OneVsOneModel ovo;
  ovo.n_classes = n_classes;
  for (size_t a = 0; a + 1 < n_classes; ++a) {
    for (size_t b = a + 1; b < n_classes; ++b) {
      Matrix Xp(members[a].size() + members[b].size(), X.cols());
      std::vector<size_t> yp(Xp.rows());
      size_t r = 0;
      for (size_t cls : {a, b})
        for (size_t i : members[cls]) {
          for (size_t j = 0; j < X.cols(); ++j) Xp(r, j) = X(i, j);
          yp[r++] = cls == a ? 0 : 1;
        }
      TrainConfig pair_config = config;
      pair_config.seed =
          derive_seed(config.seed, "pair:" + std::to_string(a) + ":" + std::to_string(b));
      LinearModel model = config.loss == PairwiseLoss::hinge
                              ? train_hinge_pair(Xp, yp, pair_config)
                              : train_softmax(Xp, yp, 2, pair_config).model;
      ovo.pairs.push_back({a, b, std::move(model)});
    }
  }
  return ovo;
}

// Majority vote over all pairwise games; ties go to the largest summed signed
// margin among the tied classes, then the lowest class index.
inline size_t predict_one_vs_one(const OneVsOneModel& ovo, std::span<const double> x) {
  if (ovo.pairs.empty()) throw Error("predict_one_vs_one: empty model");
  std::vector<size_t> votes(ovo.n_classes, 0);
  std::vector<double> margin(ovo.n_classes, 0.0);
  for (const auto& pair : ovo.pairs) {
    auto s = pair.model.scores(x);
    double diff = s[1] - s[0];  // positive favours b
    margin[pair.a] -= diff;
    margin[pair.b] += diff;
    ++votes[diff > 0 ? pair.b : pair.a];
  }
  size_t best = 0;
  for (size_t c = 1; c < ovo.n_classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best])) best = c;
  }
  return best;
}

inline std::vector<size_t> predict_all_one_vs_one(const OneVsOneModel& ovo, const Matrix& X) {
  std::vector<size_t> out(X.rows());
  for (size_t i = 0; i < X.rows(); ++i) out[i] = predict_one_vs_one(ovo, X.row(i));
  return out;
}

// Fraction of rows whose true label sits within the k best scores; within a
// row, equal scores rank by lower class index.
inline double topk_accuracy(const Matrix& scores, const std::vector<size_t>& labels, size_t k) {
  if (scores.rows() != labels.size()) throw Error("topk_accuracy: label count mismatch");
  if (k < 1 || k > scores.cols()) throw Error("topk_accuracy: k out of range");
  if (scores.rows() == 0) return 0;
  size_t hits = 0;
  for (size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    size_t truth = labels[i];
    if (truth >= scores.cols()) throw Error("topk_accuracy: label out of range");
    size_t rank = 0;
    for (size_t c = 0; c < scores.cols(); ++c) {
      if (c == truth) continue;
      if (row[c] > row[truth] || (row[c] == row[truth] && c < truth)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return double(hits) / double(scores.rows());
}

}  // namespace webcorpus
