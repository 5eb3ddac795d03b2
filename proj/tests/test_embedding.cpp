// PCA reduction, t-SNE embedding, scatter emission.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "webcorpus/pca.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/scatter.hpp"
#include "webcorpus/tsne.hpp"

using namespace webcorpus;
namespace fs = std::filesystem;

namespace {

Matrix random_matrix(size_t n, size_t d, Rng& rng, double scale = 1.0) {
  Matrix X(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) X(i, j) = rng.normal() * scale;
  return X;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double m = 0;
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// pca

TEST_CASE("collinear points project onto their line") {
  // y = 2x: the single component must be parallel to (1,2)/sqrt(5).
  Matrix X(5, 2);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = i;
    X(i, 1) = 2.0 * i;
  }
  PcaResult r = pca_fit_transform(X, 1);
  REQUIRE(r.model.components.rows() == 1);
  double cx = r.model.components(0, 0), cy = r.model.components(0, 1);
  double inv = 1.0 / std::sqrt(5.0);
  CHECK(std::abs(std::abs(cx) - inv) < 1e-10);
  CHECK(std::abs(std::abs(cy) - 2 * inv) < 1e-10);
  CHECK(cy > 0);  // sign convention: largest-magnitude coordinate positive

  // All variance lives on the line: reconstruction is exact.
  Matrix back = r.model.inverse_transform(r.projection);
  CHECK(max_abs_diff(back, X) < 1e-10);
}

TEST_CASE("full-rank pca reconstructs exactly") {
  Rng rng(5);
  Matrix X = random_matrix(20, 6, rng, 3.0);
  PcaResult r = pca_fit_transform(X, 6);
  Matrix back = r.model.inverse_transform(r.projection);
  CHECK(max_abs_diff(back, X) < 1e-10);
}

TEST_CASE("pca agrees with an independent jacobi eigensolver") {
  Rng rng(99);
  Matrix X = random_matrix(50, 10, rng, 2.0);
  size_t k = 4;
  PcaResult r = pca_fit_transform(X, k);

  // Covariance by hand.
  size_t n = X.rows(), d = X.cols();
  std::vector<double> mean(d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) mean[j] += X(i, j) / double(n);
  Matrix cov(d, d);
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < d; ++b) {
      double s = 0;
      for (size_t i = 0; i < n; ++i) s += (X(i, a) - mean[a]) * (X(i, b) - mean[b]);
      cov(a, b) = s / double(n - 1);
    }
  testutil::JacobiEigen eig = testutil::jacobi_eigen(cov);

  for (size_t c = 0; c < k; ++c) {
    CHECK(std::abs(r.model.explained_variance[c] - eig.values[c]) < 1e-8);
    // Components match up to sign.
    double err_plus = 0, err_minus = 0;
    for (size_t j = 0; j < d; ++j) {
      err_plus = std::max(err_plus, std::abs(r.model.components(c, j) - eig.vectors(c, j)));
      err_minus = std::max(err_minus, std::abs(r.model.components(c, j) + eig.vectors(c, j)));
    }
    CHECK(std::min(err_plus, err_minus) < 1e-8);
  }

  // Projections agree with explicitly projecting on the oracle basis.
  for (size_t c = 0; c < k; ++c) {
    for (size_t i = 0; i < n; ++i) {
      double s = 0;
      for (size_t j = 0; j < d; ++j) s += (X(i, j) - mean[j]) * eig.vectors(c, j);
      CHECK(std::abs(std::abs(s) - std::abs(r.projection(i, c))) < 1e-8);
    }
  }
}

TEST_CASE("components are orthonormal") {
  Rng rng(123);
  Matrix X = random_matrix(30, 8, rng);
  PcaResult r = pca_fit_transform(X, 5);
  for (size_t a = 0; a < 5; ++a)
    for (size_t b = 0; b < 5; ++b) {
      double s = dot(r.model.components.row(a), r.model.components.row(b));
      CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("explained variance is non-negative and non-increasing") {
  Rng rng(321);
  Matrix X = random_matrix(40, 7, rng, 2.5);
  PcaResult r = pca_fit_transform(X, 7);
  for (size_t c = 0; c < 7; ++c) {
    CHECK(r.model.explained_variance[c] >= 0.0);
    if (c > 0) CHECK(r.model.explained_variance[c] <= r.model.explained_variance[c - 1] + 1e-12);
  }
}

TEST_CASE("reconstruction error is non-increasing in k") {
  Rng rng(7);
  Matrix X = random_matrix(25, 6, rng, 2.0);
  double prev = 1e300;
  for (size_t k = 1; k <= 6; ++k) {
    PcaResult r = pca_fit_transform(X, k);
    Matrix back = r.model.inverse_transform(r.projection);
    double err = 0;
    for (size_t i = 0; i < X.rows(); ++i)
      for (size_t j = 0; j < X.cols(); ++j) {
        double d2 = X(i, j) - back(i, j);
        err += d2 * d2;
      }
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev < 1e-10);  // k = d reconstructs
}

TEST_CASE("pca is translation invariant") {
  Rng rng(55);
  Matrix X = random_matrix(20, 4, rng);
  Matrix shifted = X;
  for (size_t i = 0; i < X.rows(); ++i)
    for (size_t j = 0; j < X.cols(); ++j) shifted(i, j) += 100.0 + double(j);
  PcaResult a = pca_fit_transform(X, 3);
  PcaResult b = pca_fit_transform(shifted, 3);
  CHECK(max_abs_diff(a.model.components, b.model.components) < 1e-8);
  CHECK(max_abs_diff(a.projection, b.projection) < 1e-8);
  for (size_t j = 0; j < 4; ++j)
    CHECK(std::abs(b.model.mean[j] - (a.model.mean[j] + 100.0 + double(j))) < 1e-10);
}

TEST_CASE("pca validates its arguments") {
  Rng rng(9);
  Matrix X = random_matrix(10, 4, rng);
  CHECK_THROWS_AS(pca_fit_transform(X, 0), Error);
  CHECK_THROWS_AS(pca_fit_transform(X, 5), Error);  // k > d
  Matrix one_row(1, 4, 1.0);
  CHECK_THROWS_AS(pca_fit_transform(one_row, 1), Error);
  Matrix tall(3, 10, 1.0);
  CHECK_THROWS_AS(pca_fit_transform(tall, 4), Error);  // k > n
}

// ---------------------------------------------------------------------------
// t-sne affinities

TEST_CASE("conditional affinity rows sum to one") {
  Rng rng(202);
  Matrix X = random_matrix(40, 5, rng);
  Matrix P = conditional_affinities(X, 10.0);
  REQUIRE(P.rows() == 40);
  for (size_t i = 0; i < P.rows(); ++i) {
    double sum = 0;
    for (size_t j = 0; j < P.cols(); ++j) {
      CHECK(P(i, j) >= 0.0);
      sum += P(i, j);
    }
    CHECK(std::abs(sum - 1.0) < 1e-10);
    CHECK(P(i, i) == 0.0);
  }
}

TEST_CASE("every affinity row hits the target entropy") {
  Rng rng(303);
  Matrix X = random_matrix(60, 8, rng, 3.0);
  double perplexity = 15.0;
  Matrix P = conditional_affinities(X, perplexity);
  double target = std::log2(perplexity);
  for (size_t i = 0; i < P.rows(); ++i) {
    double bits = 0;
    for (size_t j = 0; j < P.cols(); ++j)
      if (P(i, j) > 0) bits -= P(i, j) * std::log2(P(i, j));
    CHECK(std::abs(bits - target) < 1e-5);
  }
}

TEST_CASE("joint affinities are symmetric, zero-diagonal and normalized") {
  Rng rng(404);
  Matrix X = random_matrix(30, 4, rng);
  Matrix P = compute_affinities(X, 8.0);
  double total = 0;
  for (size_t i = 0; i < P.rows(); ++i) {
    CHECK(P(i, i) == 0.0);
    for (size_t j = 0; j < P.cols(); ++j) {
      CHECK(P(i, j) == P(j, i));
      total += P(i, j);
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("affinities are invariant under rotation") {
  Rng rng(505);
  size_t n = 30, d = 6;
  Matrix X = random_matrix(n, d, rng);
  // Rotate coordinate pairs (0,1), (2,3), (4,5) by fixed angles: orthogonal map.
  double angles[3] = {0.3, 1.1, 2.2};
  Matrix R(n, d);
  for (size_t i = 0; i < n; ++i)
    for (int p = 0; p < 3; ++p) {
      double c = std::cos(angles[p]), s = std::sin(angles[p]);
      R(i, 2 * p) = c * X(i, 2 * p) - s * X(i, 2 * p + 1);
      R(i, 2 * p + 1) = s * X(i, 2 * p) + c * X(i, 2 * p + 1);
    }
  Matrix Pa = compute_affinities(X, 7.0);
  Matrix Pb = compute_affinities(R, 7.0);
  CHECK(max_abs_diff(Pa, Pb) < 1e-10);
}

TEST_CASE("duplicate points do not break the beta search") {
  Matrix X(6, 2, 0.0);
  for (int i = 3; i < 6; ++i) X(i, 0) = 5.0;  // two stacks of identical points
  Matrix P;
  CHECK_NOTHROW(P = conditional_affinities(X, 2.0));
  for (size_t i = 0; i < P.rows(); ++i)
    for (size_t j = 0; j < P.cols(); ++j) CHECK(std::isfinite(P(i, j)));
}

// ---------------------------------------------------------------------------
// t-sne embedding

namespace {

TsneConfig quick_tsne(uint64_t seed, size_t iterations = 300) {
  TsneConfig cfg;
  cfg.perplexity = 10;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("tsne is bit-deterministic per seed") {
  Rng rng(606);
  Matrix X = random_matrix(40, 6, rng);
  TsneConfig cfg = quick_tsne(17, 50);
  EmbeddingResult a = tsne_embed(X, cfg);
  EmbeddingResult b = tsne_embed(X, cfg);
  CHECK(a.y == b.y);  // exact double equality
  CHECK(a.kl_trace == b.kl_trace);
  cfg.seed = 18;
  EmbeddingResult c = tsne_embed(X, cfg);
  CHECK_FALSE(a.y == c.y);
}

TEST_CASE("tsne descends the kl objective and separates blobs") {
  testutil::BlobData blobs = testutil::make_blobs(50, 3, 10, 12.0, 1.0, Rng(808));
  REQUIRE(blobs.X.rows() == 150);
  TsneConfig cfg;
  cfg.perplexity = 20;
  cfg.iterations = 400;
  cfg.seed = 3;
  EmbeddingResult r = tsne_embed(blobs.X, cfg);
  REQUIRE(r.y.rows() == 150);
  REQUIRE(r.y.cols() == 2);
  REQUIRE(r.kl_trace.size() == 400);
  CHECK(r.kl_trace.back() < r.kl_trace.front());
  for (double v : r.kl_trace) CHECK(std::isfinite(v));
  CHECK(testutil::silhouette(r.y, blobs.labels) > 0.5);
}

TEST_CASE("tsne output stays finite on degenerate input") {
  Matrix X(8, 3, 0.0);  // all points identical
  TsneConfig cfg;
  cfg.perplexity = 2;
  cfg.iterations = 30;
  EmbeddingResult r = tsne_embed(X, cfg);
  for (size_t i = 0; i < r.y.rows(); ++i)
    for (size_t j = 0; j < r.y.cols(); ++j) CHECK(std::isfinite(r.y(i, j)));
}

TEST_CASE("tsne validates perplexity against the sample count") {
  Rng rng(909);
  Matrix X = random_matrix(10, 3, rng);
  TsneConfig cfg;
  cfg.perplexity = 10;  // must be < n
  CHECK_THROWS_AS(tsne_embed(X, cfg), Error);
  cfg.perplexity = 1.0;  // must be > 1
  CHECK_THROWS_AS(tsne_embed(X, cfg), Error);
  cfg.perplexity = 5;
  cfg.iterations = 0;
  CHECK_THROWS_AS(tsne_embed(X, cfg), Error);
  cfg = {};
  cfg.perplexity = 5;
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(tsne_embed(X, cfg), Error);
}

TEST_CASE("embedding recenters each iteration") {
  Rng rng(111);
  Matrix X = random_matrix(25, 4, rng);
  TsneConfig cfg = quick_tsne(5, 40);
  cfg.perplexity = 5;
  EmbeddingResult r = tsne_embed(X, cfg);
  for (size_t j = 0; j < r.y.cols(); ++j) {
    double mean = 0;
    for (size_t i = 0; i < r.y.rows(); ++i) mean += r.y(i, j);
    mean /= double(r.y.rows());
    CHECK(std::abs(mean) < 1e-9);
  }
}

// ---------------------------------------------------------------------------
// scatter plots

TEST_CASE("superclass map parses groups and resolves membership") {
  SuperClassMap map = SuperClassMap::parse(
      "# comment\n"
      "birds\tjay,robin\n"
      "dogs\tboxer\n");
  REQUIRE(map.groups.size() == 2);
  map.validate();
  CHECK(map.group_of("jay") == "birds");
  CHECK(map.group_of("boxer") == "dogs");
  CHECK_FALSE(map.group_of("pizza").has_value());
  SuperClassMap again = SuperClassMap::parse(map.serialize());
  CHECK(again.serialize() == map.serialize());
}

TEST_CASE("superclass groups must be disjoint and uniquely named") {
  CHECK_THROWS_AS(SuperClassMap::parse("a\tjay\nb\tjay\n"), Error);     // class in two groups
  CHECK_THROWS_AS(SuperClassMap::parse("a\tjay\na\tboxer\n"), Error);   // duplicate group name
  CHECK_THROWS_AS(SuperClassMap::parse("missing-ids\n"), ParseError);
  SuperClassMap manual;
  manual.groups.emplace_back("g", std::vector<std::string>{"jay"});
  manual.groups.emplace_back("h", std::vector<std::string>{"jay"});
  CHECK_THROWS_AS(manual.validate(), Error);
}

TEST_CASE("scatter csv has a header plus one row per point") {
  Rng rng(222);
  size_t per_class = 50, n_groups = 5, classes_per_group = 11;
  size_t n = per_class * n_groups * classes_per_group / 10;  // keep runtime sane: 275 points
  Matrix y(n, 2);
  std::vector<std::string> labels(n);
  SuperClassMap map;
  for (size_t g = 0; g < n_groups; ++g) {
    std::vector<std::string> ids;
    for (size_t c = 0; c < classes_per_group; ++c)
      ids.push_back("c" + std::to_string(g) + "_" + std::to_string(c));
    map.groups.emplace_back("group" + std::to_string(g), ids);
  }
  for (size_t i = 0; i < n; ++i) {
    y(i, 0) = rng.normal();
    y(i, 1) = rng.normal();
    labels[i] = "c" + std::to_string(i % n_groups) + "_" + std::to_string(i % classes_per_group);
  }
  ScatterFiles files = emit_scatter(y, labels, map);
  auto lines = split_lines(files.csv);
  REQUIRE(lines.size() == n + 1);
  CHECK(lines[0] == "x,y,class_id,superclass");
  CHECK(files.unmapped_points == 0);

  // Five distinct colors in use, one per group.
  std::set<std::string> fills;
  size_t pos = 0;
  while ((pos = files.svg.find("fill=\"#", pos)) != std::string::npos) {
    fills.insert(files.svg.substr(pos + 6, 7));
    pos += 7;
  }
  // Legend + points share the same palette; "other" never appears unneeded.
  CHECK(fills.size() >= n_groups);
  CHECK(files.svg.find("group0") != std::string::npos);
  CHECK(files.svg.find(">other<") == std::string::npos);
}

TEST_CASE("an empty map sends every point to the other bucket") {
  Matrix y(4, 2, 0.5);
  std::vector<std::string> labels{"a", "b", "c", "d"};
  ScatterFiles files = emit_scatter(y, labels, SuperClassMap{});
  CHECK(files.unmapped_points == 4);
  auto lines = split_lines(files.csv);
  REQUIRE(lines.size() == 5);
  for (size_t i = 1; i < lines.size(); ++i)
    CHECK(lines[i].find(",other") != std::string::npos);
  CHECK(files.svg.find("other") != std::string::npos);
}

TEST_CASE("unmapped classes are counted and drawn as other") {
  Matrix y(3, 2, 1.0);
  std::vector<std::string> labels{"jay", "boxer", "mystery"};
  SuperClassMap map = SuperClassMap::parse("birds\tjay\ndogs\tboxer\n");
  ScatterFiles files = emit_scatter(y, labels, map);
  CHECK(files.unmapped_points == 1);
  CHECK(files.csv.find("mystery,other") != std::string::npos);
}

TEST_CASE("scatter requires two embedding columns and matching labels") {
  Matrix one_col(3, 1, 0.0);
  std::vector<std::string> labels{"a", "b", "c"};
  CHECK_THROWS_AS(emit_scatter(one_col, labels, SuperClassMap{}), Error);
  Matrix y(3, 2, 0.0);
  std::vector<std::string> two{"a", "b"};
  CHECK_THROWS_AS(emit_scatter(y, two, SuperClassMap{}), Error);
}

TEST_CASE("write_scatter materializes both files") {
  testutil::TempDir dir("scatter");
  Matrix y(2, 2);
  y(0, 0) = -1;
  y(0, 1) = 2;
  y(1, 0) = 3;
  y(1, 1) = -4;
  std::vector<std::string> labels{"a", "b"};
  ScatterFiles files = write_scatter(y, labels, SuperClassMap{}, dir.path());
  CHECK(fs::exists(dir / "scatter.csv"));
  CHECK(fs::exists(dir / "scatter.svg"));
  CHECK(read_file(dir / "scatter.csv") == files.csv);
  CHECK(read_file(dir / "scatter.svg") == files.svg);
  CHECK(files.svg.find("<svg") == 0);
}
