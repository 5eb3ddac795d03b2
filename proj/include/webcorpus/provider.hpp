#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "webcorpus/util.hpp"

namespace webcorpus {

// One search result. rank is the global chronological position within the
// class, assigned at collect time; it strictly increases in arrival order.
struct ImageHit {
  std::string url;
  std::string query;
  std::string provider;
  int page = 0;
  int64_t rank = 0;

  bool operator==(const ImageHit&) const = default;
};

// Transient search transport failure; collect retries these per policy.
class ProviderError : public Error {
public:
  using Error::Error;
};

// Paginated image-search backend. has_more == false means subsequent pages
// return empty.
class SearchProvider {
public:
  struct Page {
    std::vector<std::string> urls;
    bool has_more = false;
  };

  virtual ~SearchProvider() = default;
  virtual std::string name() const = 0;
  virtual Page search(const std::string& query, int page) = 0;
};

// Filesystem path component for a query: bytes outside [A-Za-z0-9._-] map
// to '_'.
inline std::string sanitize_for_path(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

// Offline provider backed by a directory of page files:
//   <root>/<sanitized-query>/page_<n>.txt, one URL per line.
// A missing page file ends pagination.
class FixtureProvider : public SearchProvider {
public:
  explicit FixtureProvider(std::filesystem::path root) : root_(std::move(root)) {}

  std::string name() const override { return "fixture"; }

  Page search(const std::string& query, int page) override {
    Page out;
    std::filesystem::path file =
        root_ / sanitize_for_path(query) / ("page_" + std::to_string(page) + ".txt");
    if (!std::filesystem::exists(file)) return out;
    for (const auto& line : split_lines(read_file(file))) {
      std::string url = std::string(trim(line));
      if (!url.empty()) out.urls.push_back(std::move(url));
    }
    std::filesystem::path next =
        root_ / sanitize_for_path(query) / ("page_" + std::to_string(page + 1) + ".txt");
    out.has_more = std::filesystem::exists(next);
    return out;
  }

  static void write_page(const std::filesystem::path& root, const std::string& query, int page,
                         const std::vector<std::string>& urls) {
    std::filesystem::path dir = root / sanitize_for_path(query);
    std::filesystem::create_directories(dir);
    std::string body;
    for (const auto& u : urls) {
      body += u;
      body += '\n';
    }
    write_file(dir / ("page_" + std::to_string(page) + ".txt"), body);
  }

private:
  std::filesystem::path root_;
};

}  // namespace webcorpus
