#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "webcorpus/features.hpp"
#include "webcorpus/linear.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

struct EvalReport {
  std::string protocol;
  std::vector<double> split_accuracies;
  double mean = 0;
  double stddev = 0;  // population standard deviation over splits
  std::vector<std::pair<std::string, std::string>> config_echo;

  void finalize() {
    mean = 0;
    for (double a : split_accuracies) mean += a;
    if (!split_accuracies.empty()) mean /= double(split_accuracies.size());
    double var = 0;
    for (double a : split_accuracies) var += (a - mean) * (a - mean);
    if (!split_accuracies.empty()) var /= double(split_accuracies.size());
    stddev = std::sqrt(var);
  }

  // Uniform section,key,value rows: config echo, one row per split, then the
  // mean/std summary.
  std::string serialize_csv() const {
    std::string out = "section,key,value\n";
    out += "meta,protocol," + protocol + "\n";
    for (const auto& [k, v] : config_echo) out += "meta," + k + "," + v + "\n";
    for (size_t i = 0; i < split_accuracies.size(); ++i)
      out += "split," + std::to_string(i + 1) + "," + format_double(split_accuracies[i]) + "\n";
    out += "summary,mean," + format_double(mean) + "\n";
    out += "summary,std," + format_double(stddev) + "\n";
    return out;
  }
};

inline double pooled_accuracy(const std::vector<size_t>& predicted,
                              const std::vector<size_t>& truth) {
  if (predicted.size() != truth.size()) throw Error("accuracy: size mismatch");
  if (predicted.empty()) return 0;
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return double(hits) / double(predicted.size());
}

// Average of per-class accuracies over classes that appear in the truth.
inline double mean_per_class_accuracy(const std::vector<size_t>& predicted,
                                      const std::vector<size_t>& truth, size_t n_classes) {
  if (predicted.size() != truth.size()) throw Error("accuracy: size mismatch");
  std::vector<size_t> hits(n_classes, 0), totals(n_classes, 0);
  for (size_t i = 0; i < truth.size(); ++i) {
    ++totals[truth[i]];
    if (predicted[i] == truth[i]) ++hits[truth[i]];
  }
  double sum = 0;
  size_t classes_seen = 0;
  for (size_t c = 0; c < n_classes; ++c) {
    if (totals[c] == 0) continue;
    sum += double(hits[c]) / double(totals[c]);
    ++classes_seen;
  }
  return classes_seen ? sum / double(classes_seen) : 0.0;
}

namespace detail {

inline std::map<size_t, std::vector<size_t>> indices_by_class(const std::vector<size_t>& y) {
  std::map<size_t, std::vector<size_t>> by_class;
  for (size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  return by_class;
}

inline Matrix gather_rows(const Matrix& X, const std::vector<size_t>& idx) {
  Matrix out(idx.size(), X.cols());
  for (size_t r = 0; r < idx.size(); ++r)
    for (size_t j = 0; j < X.cols(); ++j) out(r, j) = X(idx[r], j);
  return out;
}

inline std::vector<size_t> gather_labels(const std::vector<size_t>& y,
                                         const std::vector<size_t>& idx) {
  std::vector<size_t> out(idx.size());
  for (size_t r = 0; r < idx.size(); ++r) out[r] = y[idx[r]];
  return out;
}

}  // namespace detail

// Per split: a seeded draw of n_train_per_class samples per class, one-vs-one
// training, evaluation on the held-out remainder as mean per-class accuracy.
inline EvalReport run_recognition_protocol(const FeatureTable& features,
                                           size_t n_train_per_class = 30, size_t n_splits = 5,
                                           uint64_t seed = 0, TrainConfig train = {}) {
  if (n_splits < 1) throw Error("recognition: n_splits must be >= 1");
  LabelCodec codec = LabelCodec::fit(features);
  size_t n_classes = codec.classes.size();
  if (n_classes < 2) throw Error("recognition: need at least 2 classes");
  Matrix X = features.matrix();
  std::vector<size_t> y = codec.encode_all(features);
  auto by_class = detail::indices_by_class(y);
  for (const auto& [c, members] : by_class)
    if (members.size() <= n_train_per_class)
      throw Error("recognition: class " + codec.classes[c] + " has " +
                  std::to_string(members.size()) + " samples, needs more than " +
                  std::to_string(n_train_per_class));

  EvalReport report;
  report.protocol = "recognition";
  for (size_t s = 0; s < n_splits; ++s) {
    Rng rng(derive_seed(seed, "recognition:" + std::to_string(s)));
    std::vector<size_t> train_idx, test_idx;
    for (const auto& [c, members] : by_class) {
      auto pick = rng.sample_indices(members.size(), n_train_per_class);
      std::vector<bool> taken(members.size(), false);
      for (size_t p : pick) taken[p] = true;
      for (size_t m = 0; m < members.size(); ++m)
        (taken[m] ? train_idx : test_idx).push_back(members[m]);
    }
    TrainConfig split_train = train;
    split_train.seed = derive_seed(seed, "recognition-train:" + std::to_string(s));
    OneVsOneModel model = train_one_vs_one(detail::gather_rows(X, train_idx),
                                           detail::gather_labels(y, train_idx), n_classes,
                                           split_train);
    auto predicted = predict_all_one_vs_one(model, detail::gather_rows(X, test_idx));
    report.split_accuracies.push_back(
        mean_per_class_accuracy(predicted, detail::gather_labels(y, test_idx), n_classes));
  }
  report.finalize();
  report.config_echo = {{"n_train_per_class", std::to_string(n_train_per_class)},
                        {"n_splits", std::to_string(n_splits)},
                        {"seed", std::to_string(seed)},
                        {"loss", to_string(train.loss)},
                        {"alpha0", format_double(train.alpha0)},
                        {"epochs", std::to_string(train.epochs)}};
  return report;
}

enum class DaMode { S, T, ST };

inline std::string to_string(DaMode mode) {
  switch (mode) {
    case DaMode::S: return "S";
    case DaMode::T: return "T";
    default: return "ST";
  }
}

inline DaMode da_mode_from_string(const std::string& s) {
  if (s == "S" || s == "s") return DaMode::S;
  if (s == "T" || s == "t") return DaMode::T;
  if (s == "ST" || s == "st" || s == "St") return DaMode::ST;
  throw Error("unknown domain-adaptation mode: " + s);
}

struct DaSplitDetail {
  std::map<std::string, size_t> source_labeled_per_class;
  std::map<std::string, size_t> target_labeled_per_class;
  size_t train_size = 0;
  size_t test_size = 0;
};

struct DaResult {
  EvalReport report;
  std::vector<DaSplitDetail> details;
};

// S/T/ST domain adaptation: labeled budgets are drawn per class and per
// split; the test set is always the target minus its labeled draw, so the
// three modes are scored against identical samples for a given seed.
inline DaResult run_da_protocol(const FeatureTable& source, const FeatureTable& target, DaMode mode,
                                size_t source_labels_per_class, size_t target_labels_per_class = 3,
                                size_t n_splits = 5, uint64_t seed = 0, TrainConfig train = {}) {
  if (n_splits < 1) throw Error("da: n_splits must be >= 1");
  auto source_labels = source.labels_sorted();
  auto target_labels = target.labels_sorted();
  if (source_labels != target_labels)
    throw Error("da: source and target label sets differ");
  LabelCodec codec;
  codec.classes = source_labels;
  for (size_t i = 0; i < codec.classes.size(); ++i) codec.index[codec.classes[i]] = i;
  size_t n_classes = codec.classes.size();
  if (n_classes < 2) throw Error("da: need at least 2 classes");

  Matrix Xs = source.matrix(), Xt = target.matrix();
  if (Xs.cols() != Xt.cols()) throw Error("da: feature dimensions differ");
  std::vector<size_t> ys = codec.encode_all(source), yt = codec.encode_all(target);
  auto source_by_class = detail::indices_by_class(ys);
  auto target_by_class = detail::indices_by_class(yt);
  bool uses_source = mode != DaMode::T;
  for (const auto& [c, members] : source_by_class)
    if (uses_source && members.size() < source_labels_per_class)
      throw Error("da: source class " + codec.classes[c] + " has " +
                  std::to_string(members.size()) + " samples, needs " +
                  std::to_string(source_labels_per_class));
  for (const auto& [c, members] : target_by_class)
    if (members.size() <= target_labels_per_class)
      throw Error("da: target class " + codec.classes[c] + " has " +
                  std::to_string(members.size()) + " samples, needs more than " +
                  std::to_string(target_labels_per_class));

  DaResult result;
  result.report.protocol = "domain-adaptation-" + to_string(mode);
  for (size_t s = 0; s < n_splits; ++s) {
    DaSplitDetail detail_row;
    Rng source_rng(derive_seed(seed, "da-source:" + std::to_string(s)));
    Rng target_rng(derive_seed(seed, "da-target:" + std::to_string(s)));
    std::vector<std::pair<const Matrix*, size_t>> staged;
    std::vector<size_t> train_y;
    if (uses_source) {
      for (const auto& [c, members] : source_by_class) {
        auto pick = source_rng.sample_indices(members.size(), source_labels_per_class);
        for (size_t p : pick) {
          staged.push_back({&Xs, members[p]});
          train_y.push_back(c);
        }
        detail_row.source_labeled_per_class[codec.classes[c]] = pick.size();
      }
    }
    std::vector<size_t> test_idx;
    for (const auto& [c, members] : target_by_class) {
      auto pick = target_rng.sample_indices(members.size(), target_labels_per_class);
      std::vector<bool> taken(members.size(), false);
      for (size_t p : pick) taken[p] = true;
      for (size_t m = 0; m < members.size(); ++m) {
        if (taken[m]) {
          if (mode != DaMode::S) {
            staged.push_back({&Xt, members[m]});
            train_y.push_back(c);
            detail_row.target_labeled_per_class[codec.classes[c]] += 1;
          }
        } else {
          test_idx.push_back(members[m]);
        }
      }
      if (mode == DaMode::S) detail_row.target_labeled_per_class[codec.classes[c]] = 0;
    }
    Matrix Xtrain(staged.size(), Xs.cols());
    for (size_t r = 0; r < staged.size(); ++r)
      for (size_t j = 0; j < Xs.cols(); ++j) Xtrain(r, j) = (*staged[r].first)(staged[r].second, j);
    detail_row.train_size = staged.size();
    detail_row.test_size = test_idx.size();

    TrainConfig split_train = train;
    split_train.seed = derive_seed(seed, "da-train:" + std::to_string(s));
    OneVsOneModel model = train_one_vs_one(Xtrain, train_y, n_classes, split_train);
    auto predicted = predict_all_one_vs_one(model, detail::gather_rows(Xt, test_idx));
    result.report.split_accuracies.push_back(
        pooled_accuracy(predicted, detail::gather_labels(yt, test_idx)));
    result.details.push_back(std::move(detail_row));
  }
  result.report.finalize();
  result.report.config_echo = {{"mode", to_string(mode)},
                               {"source_labels_per_class", std::to_string(source_labels_per_class)},
                               {"target_labels_per_class", std::to_string(target_labels_per_class)},
                               {"n_splits", std::to_string(n_splits)},
                               {"seed", std::to_string(seed)},
                               {"loss", to_string(train.loss)}};
  return result;
}

}  // namespace webcorpus
