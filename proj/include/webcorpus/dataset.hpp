#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "webcorpus/manifest.hpp"
#include "webcorpus/random.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

enum class SplitStrategy { random, controlled_chronological };

struct SplitConfig {
  SplitStrategy strategy = SplitStrategy::controlled_chronological;
  std::optional<size_t> per_class_target;
  uint64_t seed = 0;  // random strategy only
};

// Ordered (class, path) listing; rows are grouped by class in class order,
// chronological within a class.
struct SplitListing {
  struct Row {
    std::string class_id;
    std::string local_path;

    bool operator==(const Row&) const = default;
  };
  std::vector<Row> rows;
  std::vector<std::string> shortfalls;  // classes that had fewer survivors than the target

  std::string serialize() const {
    std::string out;
    for (const auto& r : rows) {
      out += r.class_id;
      out += '\t';
      out += r.local_path;
      out += '\n';
    }
    return out;
  }

  static SplitListing parse(std::string_view text) {
    SplitListing out;
    auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      auto fields = split(lines[i], '\t');
      if (fields.size() != 2) throw ParseError("expected class_id<TAB>local_path", i + 1);
      out.rows.push_back({fields[0], fields[1]});
    }
    return out;
  }
};

// Survivors are downloaded records after supersession; rejected and
// duplicate-removed records never enter splits or stats.
inline std::map<std::string, std::vector<ImageRecord>> usable_by_class(const Manifest& manifest) {
  std::map<std::string, std::vector<ImageRecord>> by_class;
  Manifest effective = manifest.effective();
  for (const auto& r : effective.records())
    if (r.status == FetchStatus::downloaded) by_class[r.class_id].push_back(r);
  for (auto& [id, records] : by_class)
    std::stable_sort(records.begin(), records.end(),
                     [](const ImageRecord& a, const ImageRecord& b) { return a.rank < b.rank; });
  return by_class;
}

// controlled_chronological takes the per_class_target lowest-rank survivors;
// random samples uniformly without replacement from a per-class seeded
// stream. Classes short of the target contribute everything they have and
// are reported, never fatal.
inline SplitListing make_split(const Manifest& manifest, const SplitConfig& config) {
  if (config.per_class_target && *config.per_class_target < 1)
    throw Error("per_class_target must be >= 1");
  SplitListing listing;
  auto by_class = usable_by_class(manifest);
  Manifest effective = manifest.effective();
  for (const auto& r : effective.records())
    if (!by_class.count(r.class_id)) {
      listing.shortfalls.push_back(r.class_id + ": no usable images");
      by_class.emplace(r.class_id, std::vector<ImageRecord>{});
      log(LogLevel::warn, "split: class " + r.class_id + " has no usable images");
    }
  for (const auto& [class_id, records] : by_class) {
    if (records.empty()) continue;
    size_t target = config.per_class_target.value_or(records.size());
    std::vector<size_t> pick;
    if (records.size() <= target) {
      pick.resize(records.size());
      std::iota(pick.begin(), pick.end(), size_t{0});
      if (records.size() < target) {
        listing.shortfalls.push_back(class_id + ": wanted " + std::to_string(target) + ", have " +
                                     std::to_string(records.size()));
        log(LogLevel::warn, "split shortfall for " + class_id);
      }
    } else if (config.strategy == SplitStrategy::controlled_chronological) {
      pick.resize(target);
      std::iota(pick.begin(), pick.end(), size_t{0});
    } else {
      Rng rng(derive_seed(config.seed, class_id));
      pick = rng.sample_indices(records.size(), target);
      std::sort(pick.begin(), pick.end());  // keep chronological order within the class
    }
    for (size_t i : pick)
      listing.rows.push_back({class_id, records[i].local_path.value_or("")});
  }
  return listing;
}

// Table-style corpus statistics over usable images.
struct CorpusStats {
  std::map<std::string, size_t> per_class;
  double average = 0;
  size_t min = 0;
  size_t max = 0;
  size_t total = 0;

  std::string serialize() const {
    std::string out = "classes,total_images,average_per_class,min_per_class,max_per_class\n";
    out += std::to_string(per_class.size()) + "," + std::to_string(total) + "," +
           format_double(average) + "," + std::to_string(min) + "," + std::to_string(max) + "\n";
    out += "class_id,count\n";
    for (const auto& [id, count] : per_class) out += id + "," + std::to_string(count) + "\n";
    return out;
  }
};

inline CorpusStats stats_from_counts(std::map<std::string, size_t> counts) {
  CorpusStats s;
  s.per_class = std::move(counts);
  if (s.per_class.empty()) return s;
  s.min = SIZE_MAX;
  for (const auto& [id, count] : s.per_class) {
    s.total += count;
    s.min = std::min(s.min, count);
    s.max = std::max(s.max, count);
  }
  s.average = double(s.total) / double(s.per_class.size());
  return s;
}

inline CorpusStats compute_stats(const Manifest& manifest) {
  std::map<std::string, size_t> counts;
  for (const auto& [class_id, records] : usable_by_class(manifest))
    counts[class_id] = records.size();
  return stats_from_counts(std::move(counts));
}

inline CorpusStats compute_stats(const SplitListing& listing) {
  std::map<std::string, size_t> counts;
  for (const auto& r : listing.rows) ++counts[r.class_id];
  return stats_from_counts(std::move(counts));
}

// Copies split members into <dir>/<class_id>/; the listing itself stays the
// primary artifact.
inline void materialize_split(const SplitListing& listing, const std::filesystem::path& dir) {
  for (const auto& row : listing.rows) {
    std::filesystem::path target = dir / row.class_id;
    std::filesystem::create_directories(target);
    std::filesystem::path src(row.local_path);
    std::filesystem::copy_file(src, target / src.filename(),
                               std::filesystem::copy_options::overwrite_existing);
  }
}

}  // namespace webcorpus
