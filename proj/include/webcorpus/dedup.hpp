#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "webcorpus/bktree.hpp"
#include "webcorpus/image.hpp"
#include "webcorpus/manifest.hpp"
#include "webcorpus/phash.hpp"

namespace webcorpus {

// Outcome of one dedup sweep over an ordered record set. Indices refer to the
// input vector.
struct DedupResult {
  struct Removal {
    size_t removed_index;
    size_t kept_index;  // nearest kept record the duplicate matched
    int distance;
  };
  std::vector<size_t> kept;
  std::vector<size_t> removed;
  std::vector<Removal> removals;
};

// Greedy sweep in ascending rank: a record is removed iff its hash lies
// within `threshold` of an already-kept record, so the earliest-ranked
// instance of each duplicate group survives.
inline DedupResult dedup_records(const std::vector<ImageRecord>& records, int threshold = 5) {
  for (const auto& r : records)
    if (!r.phash)
      throw Error("record missing phash: " + r.class_id + " " + r.url);

  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&records](size_t a, size_t b) { return records[a].rank < records[b].rank; });

  DedupResult result;
  HammingIndex index;
  for (size_t idx : order) {
    PHash64 h{*records[idx].phash};
    auto matches = index.radius_query(h, threshold);
    if (matches.empty()) {
      index.insert(h, uint32_t(idx));
      result.kept.push_back(idx);
    } else {
      result.removed.push_back(idx);
      result.removals.push_back({idx, size_t(matches.front().payload), matches.front().distance});
    }
  }
  return result;
}

struct DedupReportRow {
  std::string class_id;
  std::string kept_path;
  std::string removed_path;
  int distance;
};

struct DedupOutcome {
  Manifest manifest;  // effective records after dedup supersession
  std::vector<DedupReportRow> report;
  std::vector<ImageRecord> appended;  // superseding records written by the sweep
  size_t hashed = 0;
  size_t undecodable = 0;
};

inline std::string serialize_dedup_report(const std::vector<DedupReportRow>& rows) {
  std::string out = "class_id,kept_path,removed_path,distance\n";
  for (const auto& r : rows) {
    out += r.class_id + "," + r.kept_path + "," + r.removed_path + "," +
           std::to_string(r.distance) + "\n";
  }
  return out;
}

inline std::string serialize_hash_dump(const std::vector<ImageRecord>& records) {
  std::string out = "local_path,phash_hex\n";
  for (const auto& r : records)
    if (r.status == FetchStatus::downloaded && r.phash && r.local_path)
      out += *r.local_path + "," + to_hex16(*r.phash) + "\n";
  return out;
}

// Full manifest sweep: hash any downloaded record lacking a phash (rejecting
// undecodable files), then run the greedy dedup per class, or corpus-wide
// when global is set. Superseding records are appended to the in-memory
// manifest and to `writer` when given.
inline DedupOutcome apply_dedup(const Manifest& manifest, int threshold, bool global = false,
                                ManifestWriter* writer = nullptr) {
  DedupOutcome outcome;
  std::vector<ImageRecord> records = manifest.effective().records();

  auto emit = [&](ImageRecord& r) {
    r.fetched_at = iso8601_now();
    if (writer) writer->append(r);
    outcome.appended.push_back(r);
  };

  for (auto& r : records) {
    if (r.status != FetchStatus::downloaded || r.phash) continue;
    if (!r.local_path) continue;
    auto img = decode_image(read_file(*r.local_path));
    if (!img) {
      r.status = FetchStatus::rejected;
      r.error = "undecodable image";
      ++outcome.undecodable;
      emit(r);
      continue;
    }
    r.phash = ahash(*img).bits;
    ++outcome.hashed;
    emit(r);
  }

  std::map<std::string, std::vector<ImageRecord>> groups;
  for (const auto& r : records)
    if (r.status == FetchStatus::downloaded) groups[global ? std::string() : r.class_id].push_back(r);

  std::map<std::pair<std::string, std::string>, ImageRecord*> by_key;
  for (auto& r : records) by_key[{r.class_id, r.url}] = &r;

  for (auto& [group, members] : groups) {
    DedupResult d = dedup_records(members, threshold);
    for (const auto& removal : d.removals) {
      ImageRecord& dup = *by_key[{members[removal.removed_index].class_id,
                                  members[removal.removed_index].url}];
      const ImageRecord& kept = members[removal.kept_index];
      dup.status = FetchStatus::removed_duplicate;
      emit(dup);
      outcome.report.push_back({dup.class_id, kept.local_path.value_or(""),
                                dup.local_path.value_or(""), removal.distance});
    }
  }

  Manifest out;
  for (auto& r : records) out.append(std::move(r));
  outcome.manifest = std::move(out);
  return outcome;
}

}  // namespace webcorpus
