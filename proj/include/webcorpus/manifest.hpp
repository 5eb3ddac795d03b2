#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "webcorpus/util.hpp"

namespace webcorpus {

enum class FetchStatus { pending, downloaded, failed, rejected, removed_duplicate };

inline const char* to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::pending: return "pending";
    case FetchStatus::downloaded: return "downloaded";
    case FetchStatus::failed: return "failed";
    case FetchStatus::rejected: return "rejected";
    default: return "removed_duplicate";
  }
}

inline FetchStatus fetch_status_from_string(std::string_view s) {
  if (s == "pending") return FetchStatus::pending;
  if (s == "downloaded") return FetchStatus::downloaded;
  if (s == "failed") return FetchStatus::failed;
  if (s == "rejected") return FetchStatus::rejected;
  if (s == "removed_duplicate") return FetchStatus::removed_duplicate;
  throw ParseError("unknown status: " + std::string(s));
}

// One harvested URL and its outcome. A manifest line.
struct ImageRecord {
  std::string class_id;
  std::string url;
  std::string provider;
  int64_t rank = 0;
  std::optional<std::string> local_path;
  FetchStatus status = FetchStatus::pending;
  std::optional<int64_t> byte_size;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<std::string> error;
  std::optional<uint64_t> phash;
  std::string fetched_at;

  bool operator==(const ImageRecord&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["class_id"] = class_id;
    j["url"] = url;
    j["provider"] = provider;
    j["rank"] = rank;
    if (local_path) j["local_path"] = *local_path;
    j["status"] = to_string(status);
    if (byte_size) j["byte_size"] = *byte_size;
    if (width) j["width"] = *width;
    if (height) j["height"] = *height;
    if (error) j["error"] = *error;
    if (phash) j["phash"] = to_hex16(*phash);
    j["fetched_at"] = fetched_at;
    return j;
  }

  static ImageRecord from_json(const nlohmann::json& j) {
    ImageRecord r;
    r.class_id = j.at("class_id").get<std::string>();
    r.url = j.at("url").get<std::string>();
    r.provider = j.at("provider").get<std::string>();
    r.rank = j.at("rank").get<int64_t>();
    if (j.contains("local_path")) r.local_path = j["local_path"].get<std::string>();
    r.status = fetch_status_from_string(j.at("status").get<std::string>());
    if (j.contains("byte_size")) r.byte_size = j["byte_size"].get<int64_t>();
    if (j.contains("width")) r.width = j["width"].get<int>();
    if (j.contains("height")) r.height = j["height"].get<int>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    if (j.contains("phash")) {
      std::string hex = j["phash"].get<std::string>();
      r.phash = strtoull(hex.c_str(), nullptr, 16);
    }
    r.fetched_at = j.value("fetched_at", "");
    if (r.status == FetchStatus::downloaded &&
        (!r.local_path || !r.byte_size || !r.width || !r.height))
      throw ParseError("downloaded record missing local_path/byte_size/width/height for " +
                       r.url);
    return r;
  }
};

struct ManifestLoadResult;

// Append-only log of ImageRecords. A later record for the same
// (class_id, url) supersedes earlier ones.
class Manifest {
public:
  void append(ImageRecord r) { records_.push_back(std::move(r)); }

  const std::vector<ImageRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  size_t size() const { return records_.size(); }

  // Collapses supersession: one record per (class_id, url), holding the last
  // written state, in first-appearance order.
  Manifest effective() const {
    Manifest out;
    std::map<std::pair<std::string, std::string>, size_t> index;
    for (const auto& r : records_) {
      auto key = std::make_pair(r.class_id, r.url);
      auto it = index.find(key);
      if (it == index.end()) {
        index[key] = out.records_.size();
        out.records_.push_back(r);
      } else {
        out.records_[it->second] = r;
      }
    }
    return out;
  }

  bool contains(const std::string& class_id, const std::string& url) const {
    for (const auto& r : records_)
      if (r.class_id == class_id && r.url == url) return true;
    return false;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.to_json().dump();
      out += '\n';
    }
    return out;
  }

  static ManifestLoadResult parse(std::string_view text);
  static ManifestLoadResult load(const std::filesystem::path& path);

  void save(const std::filesystem::path& path) const { write_file(path, serialize()); }

  bool operator==(const Manifest& o) const { return records_ == o.records_; }

private:
  std::vector<ImageRecord> records_;
};

struct ManifestLoadResult {
  Manifest manifest;
  std::optional<std::string> warning;  // set when a truncated tail was dropped
};

inline ManifestLoadResult Manifest::parse(std::string_view text) {
  ManifestLoadResult result;
  Manifest log;
  auto lines = split_lines(text);
  // Drop trailing blank lines so "last line" means last record line.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      log.append(ImageRecord::from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) {
        // A torn final line is the expected crash-during-append shape.
        result.warning = "dropped truncated final manifest line " + std::to_string(i + 1) +
                         ": " + e.what();
        break;
      }
      throw ParseError(std::string("corrupt manifest line: ") + e.what(), i + 1);
    }
  }
  result.manifest = log.effective();
  return result;
}

inline ManifestLoadResult Manifest::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

// Serialized appender used by concurrent downloads; one line per record,
// flushed immediately so a crash loses at most the torn tail.
class ManifestWriter {
public:
  explicit ManifestWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw IoError("cannot open manifest for append: " + path.string());
  }

  void append(const ImageRecord& r) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << r.to_json().dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("manifest append failed");
  }

private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace webcorpus
