#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "webcorpus/features.hpp"
#include "webcorpus/image.hpp"
#include "webcorpus/matrix.hpp"
#include "webcorpus/phash.hpp"
#include "webcorpus/random.hpp"

namespace testutil {

// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "webcorpus") {
    static std::atomic<uint64_t> counter{0};
    uint64_t nonce = webcorpus::splitmix64(
        uint64_t(std::chrono::steady_clock::now().time_since_epoch().count()) +
        counter.fetch_add(1) * 0x9e3779b97f4a7c15ull);
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + webcorpus::to_hex16(nonce));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// 8x8 two-tone raster whose average hash equals `mask` exactly, provided
// 0 <= popcount(mask) < 64: bright cells sit above the mean, dark below.
inline webcorpus::Raster grid_image(uint64_t mask, uint8_t dark = 64, uint8_t bright = 192) {
  webcorpus::Raster img = webcorpus::Raster::make(8, 8);
  for (int i = 0; i < 64; ++i) {
    uint8_t v = (mask >> (63 - i)) & 1 ? bright : dark;
    img.set(i / 8, i % 8, v, v, v);
  }
  return img;
}

struct BlobData {
  webcorpus::Matrix X;
  std::vector<size_t> labels;
};

// k Gaussian blobs at scaled axis-aligned centres (requires k <= d).
inline BlobData make_blobs(size_t per_class, size_t k, size_t d, double separation,
                           double noise, webcorpus::Rng& rng) {
  if (k > d) throw webcorpus::Error("make_blobs: k must be <= d");
  BlobData data{webcorpus::Matrix(per_class * k, d), {}};
  data.labels.reserve(per_class * k);
  size_t row = 0;
  for (size_t c = 0; c < k; ++c)
    for (size_t s = 0; s < per_class; ++s) {
      for (size_t j = 0; j < d; ++j)
        data.X(row, j) = (j == c ? separation : 0.0) + noise * rng.normal();
      data.labels.push_back(c);
      ++row;
    }
  return data;
}

inline BlobData make_blobs(size_t per_class, size_t k, size_t d, double separation, double noise,
                           webcorpus::Rng&& rng) {
  return make_blobs(per_class, k, d, separation, noise, rng);
}

inline webcorpus::FeatureTable blobs_to_table(const BlobData& data,
                                              const std::string& label_prefix = "class_",
                                              const std::string& domain = "") {
  webcorpus::FeatureTable table;
  table.has_domain = !domain.empty();
  for (size_t i = 0; i < data.X.rows(); ++i) {
    webcorpus::FeatureRow row;
    row.id = "s" + std::to_string(i);
    row.label = label_prefix + std::to_string(data.labels[i]);
    row.domain = domain;
    for (size_t j = 0; j < data.X.cols(); ++j) row.values.push_back(data.X(i, j));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Mean silhouette coefficient with euclidean distances, O(n^2).
inline double silhouette(const webcorpus::Matrix& X, const std::vector<size_t>& labels) {
  size_t n = X.rows();
  size_t k = 0;
  for (size_t l : labels) k = std::max(k, l + 1);
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<size_t> count(k, 0);
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum[labels[j]] += std::sqrt(webcorpus::squared_distance(X.row(i), X.row(j)));
      ++count[labels[j]];
    }
    double a = count[labels[i]] ? sum[labels[i]] / double(count[labels[i]]) : 0;
    double b = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < k; ++c) {
      if (c == labels[i] || count[c] == 0) continue;
      b = std::min(b, sum[c] / double(count[c]));
    }
    if (std::isinf(b)) continue;
    total += (b - a) / std::max(a, b);
  }
  return total / double(n);
}

struct JacobiEigen {
  std::vector<double> values;    // descending
  webcorpus::Matrix vectors;     // row r = unit eigenvector of values[r]
};

// Cyclic Jacobi eigensolver for symmetric matrices; the independent oracle
// for the production eigendecomposition path.
inline JacobiEigen jacobi_eigen(webcorpus::Matrix A) {
  size_t n = A.rows();
  webcorpus::Matrix V(n, n);
  for (size_t i = 0; i < n; ++i) V(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-26) break;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (size_t i = 0; i < n; ++i) {
          double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (size_t j = 0; j < n; ++j) {
          double apj = A(p, j), aqj = A(q, j);
          A(p, j) = c * apj - s * aqj;
          A(q, j) = s * apj + c * aqj;
        }
        for (size_t i = 0; i < n; ++i) {
          double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - s * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return A(a, a) > A(b, b); });
  JacobiEigen out{std::vector<double>(n), webcorpus::Matrix(n, n)};
  for (size_t r = 0; r < n; ++r) {
    out.values[r] = A(order[r], order[r]);
    for (size_t i = 0; i < n; ++i) out.vectors(r, i) = V(i, order[r]);
  }
  return out;
}

// Linear-scan Hamming radius search: (distance, index) sorted the same way
// the tree reports matches.
inline std::vector<std::pair<int, uint32_t>> brute_radius(const std::vector<uint64_t>& hashes,
                                                          uint64_t probe, int radius) {
  std::vector<std::pair<int, uint32_t>> out;
  for (size_t i = 0; i < hashes.size(); ++i) {
    int d = webcorpus::hamming(webcorpus::PHash64{hashes[i]}, webcorpus::PHash64{probe});
    if (d <= radius) out.push_back({d, uint32_t(i)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ProcResult {
  int code = -1;
  std::string out;
};

// Runs a shell command capturing stdout; the caller redirects stderr in the
// command string when it matters.
inline ProcResult run_process(const std::string& cmd) {
  ProcResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, got);
  int status = pclose(pipe);
  if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
  return result;
}

}  // namespace testutil
