#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <httplib.h>

// glibc's <resolv.h> (dragged in above) #defines _res, which mangles any
// later header using that identifier (Eigen does).
#ifdef _res
#undef _res
#endif

#include "webcorpus/image.hpp"
#include "webcorpus/manifest.hpp"
#include "webcorpus/provider.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};  // doubles per retry
};

// Politeness limiter; rate <= 0 disables limiting.
class TokenBucket {
public:
  explicit TokenBucket(double rate_per_sec, double burst = 0)
      : rate_(rate_per_sec),
        burst_(burst > 0 ? burst : std::max(1.0, rate_per_sec)),
        tokens_(burst_),
        last_(Clock::now()) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

private:
  using Clock = std::chrono::steady_clock;

  void refill() {
    auto now = Clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
  }

  double rate_, burst_, tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

struct CollectResult {
  std::vector<ImageHit> hits;
  bool truncated_at_cap = false;
  std::optional<std::string> error;  // set when pagination aborted with partial results
};

// Paginates one query until the provider reports no more pages or the unique
// URL count reaches `cap`. Duplicate URLs collapse keeping the first
// occurrence; ranks are dense from 0 in arrival order.
inline CollectResult collect_urls(SearchProvider& provider, const std::string& query,
                                  size_t cap = 10000, const RetryPolicy& retry = {},
                                  TokenBucket* limiter = nullptr) {
  if (cap < 1) throw Error("cap must be >= 1");
  CollectResult result;
  std::unordered_set<std::string> seen;
  for (int page = 0;; ++page) {
    SearchProvider::Page p;
    bool got_page = false;
    auto backoff = retry.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, retry.attempts); ++attempt) {
      try {
        if (limiter) limiter->acquire();
        p = provider.search(query, page);
        got_page = true;
        break;
      } catch (const ProviderError& e) {
        if (attempt == std::max(1, retry.attempts)) {
          result.error = std::string(e.what()) + " (query '" + query + "', page " +
                         std::to_string(page) + ")";
        } else {
          std::this_thread::sleep_for(backoff);
          backoff *= 2;
        }
      }
    }
    if (!got_page) return result;  // aborted; partial results flagged via error

    for (auto& url : p.urls) {
      if (!seen.insert(url).second) continue;
      result.hits.push_back({url, query, provider.name(), page, int64_t(result.hits.size())});
      if (result.hits.size() >= cap) {
        result.truncated_at_cap = true;
        return result;
      }
    }
    if (!p.has_more) return result;
  }
}

// Runs every query of a class in order and merges the results in
// chronological order, collapsing URLs shared across queries and
// re-assigning dense per-class ranks. The cap applies to each query run.
inline CollectResult collect_class_hits(SearchProvider& provider,
                                        const std::vector<std::string>& queries,
                                        size_t cap = 10000, const RetryPolicy& retry = {},
                                        TokenBucket* limiter = nullptr) {
  CollectResult merged;
  std::unordered_set<std::string> seen;
  std::vector<std::string> errors;
  for (const auto& q : queries) {
    CollectResult r = collect_urls(provider, q, cap, retry, limiter);
    for (auto& hit : r.hits) {
      if (!seen.insert(hit.url).second) continue;
      hit.rank = int64_t(merged.hits.size());
      merged.hits.push_back(std::move(hit));
    }
    merged.truncated_at_cap = merged.truncated_at_cap || r.truncated_at_cap;
    if (r.error) errors.push_back(*r.error);
  }
  if (!errors.empty()) merged.error = join(errors, "; ");
  return merged;
}

struct DownloadPolicy {
  int workers = 4;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{10000};
  int min_width = 0;   // 0 disables the resolution floor
  int min_height = 0;
  double rate_limit = 2.0;  // requests per second; <= 0 disables
  bool retry_failed = false;
  std::string user_agent = "webcorpus/0.1";
};

namespace detail {

struct ParsedUrl {
  std::string base;    // scheme://host[:port], as httplib::Client expects
  std::string target;  // /path?query
};

inline std::optional<ParsedUrl> parse_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) return std::nullopt;
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == scheme_end + 3) return std::nullopt;  // empty host
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.base = url;
    out.target = "/";
  } else {
    out.base = url.substr(0, path_start);
    out.target = url.substr(path_start);
  }
  return out;
}

inline std::string extension_for(const std::string& url, const std::string& body) {
  size_t q = url.find_first_of("?#");
  std::string path = q == std::string::npos ? url : url.substr(0, q);
  size_t dot = path.find_last_of('.');
  size_t slash = path.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    std::string ext = path.substr(dot + 1);
    for (auto& c : ext) c = char(tolower(c));
    if (ext == "ppm" || ext == "pgm" || ext == "pnm" || ext == "bmp" || ext == "jpg" ||
        ext == "jpeg" || ext == "png" || ext == "gif")
      return "." + ext;
  }
  if (body.size() >= 2 && body[0] == 'P') return ".ppm";
  if (body.size() >= 2 && body[0] == 'B' && body[1] == 'M') return ".bmp";
  return ".img";
}

}  // namespace detail

// Downloads every hit into <root>/<class_id>/, appending one outcome record
// per attempt. Record statuses: downloaded on success, failed after
// exhausted retries or HTTP errors, rejected for non-image payloads and
// below-minimum resolutions. Local write failures abort the batch with the
// partial manifest intact.
inline void download_batch(Manifest& manifest,
                           const std::map<std::string, std::vector<ImageHit>>& hits_by_class,
                           const std::filesystem::path& root, const DownloadPolicy& policy = {},
                           ManifestWriter* writer = nullptr) {
  if (policy.workers < 1) throw Error("workers must be >= 1");

  struct Task {
    std::string class_id;
    ImageHit hit;
  };
  std::vector<Task> tasks;

  // Terminal states short-circuit on re-runs; failed records re-attempt only
  // when the policy asks for it.
  std::map<std::pair<std::string, std::string>, FetchStatus> known;
  Manifest effective = manifest.effective();
  for (const auto& r : effective.records()) known[{r.class_id, r.url}] = r.status;

  std::error_code ec;
  for (const auto& [class_id, hits] : hits_by_class) {
    if (hits.empty()) continue;
    std::filesystem::path dir = root / class_id;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
      throw IoError("cannot create class directory " + dir.string());
    for (const auto& hit : hits) {
      auto it = known.find({class_id, hit.url});
      if (it != known.end()) {
        if (it->second == FetchStatus::downloaded || it->second == FetchStatus::rejected ||
            it->second == FetchStatus::removed_duplicate)
          continue;
        if (it->second == FetchStatus::failed && !policy.retry_failed) continue;
      }
      tasks.push_back({class_id, hit});
    }
  }

  TokenBucket bucket(policy.rate_limit);
  std::atomic<size_t> next{0};
  std::atomic<bool> abort{false};
  std::string abort_reason;
  std::mutex sink_mu;

  auto append_record = [&](const ImageRecord& r) {
    std::lock_guard<std::mutex> lock(sink_mu);
    manifest.append(r);
    if (writer) writer->append(r);
  };

  auto fetch_once = [&](const std::string& url) -> std::pair<httplib::Result, std::string> {
    auto parsed = detail::parse_url(url);
    if (!parsed) return {httplib::Result(nullptr, httplib::Error::Connection), "invalid URL"};
    httplib::Client client(parsed->base);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(policy.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(policy.timeout));
    client.set_default_headers({{"User-Agent", policy.user_agent}});
    return {client.Get(parsed->target), ""};
  };

  auto run_task = [&](const Task& task) {
    ImageRecord rec;
    rec.class_id = task.class_id;
    rec.url = task.hit.url;
    rec.provider = task.hit.provider;
    rec.rank = task.hit.rank;

    std::string body, content_type, failure;
    bool ok = false;
    auto backoff = policy.retry.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, policy.retry.attempts); ++attempt) {
      if (abort.load()) return;
      bucket.acquire();
      auto [res, parse_err] = fetch_once(task.hit.url);
      if (!parse_err.empty()) {
        failure = parse_err;
        break;  // malformed URLs never succeed on retry
      }
      if (!res) {
        failure = "transport error: " + httplib::to_string(res.error());
      } else if (res->status >= 500) {
        failure = "HTTP " + std::to_string(res->status);
      } else if (res->status != 200) {
        failure = "HTTP " + std::to_string(res->status);
        break;  // deterministic client-side error
      } else {
        body = res->body;
        content_type = res->get_header_value("Content-Type");
        ok = true;
        break;
      }
      if (attempt < std::max(1, policy.retry.attempts)) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }

    rec.fetched_at = iso8601_now();
    if (!ok) {
      rec.status = FetchStatus::failed;
      rec.error = failure;
      append_record(rec);
      return;
    }

    if (!content_type.empty() && content_type.rfind("image/", 0) != 0 &&
        content_type.rfind("application/octet-stream", 0) != 0) {
      rec.status = FetchStatus::rejected;
      rec.error = "non-image content type: " + content_type;
      append_record(rec);
      return;
    }

    auto img = decode_image(body);
    if (!img) {
      rec.status = FetchStatus::rejected;
      rec.error = "undecodable image";
      append_record(rec);
      return;
    }
    if ((policy.min_width > 0 && img->width < policy.min_width) ||
        (policy.min_height > 0 && img->height < policy.min_height)) {
      rec.status = FetchStatus::rejected;
      rec.error = "below minimum resolution: " + std::to_string(img->width) + "x" +
                  std::to_string(img->height);
      rec.width = img->width;
      rec.height = img->height;
      append_record(rec);
      return;
    }

    char name[64];
    snprintf(name, sizeof(name), "%06lld_%s", static_cast<long long>(task.hit.rank),
             to_hex16(fnv1a64(task.hit.url)).c_str());
    std::filesystem::path path =
        root / task.class_id / (std::string(name) + detail::extension_for(task.hit.url, body));
    try {
      write_file(path, body);
    } catch (const IoError& e) {
      bool expected = false;
      if (abort.compare_exchange_strong(expected, true)) abort_reason = e.what();
      return;
    }

    rec.status = FetchStatus::downloaded;
    rec.local_path = path.string();
    rec.byte_size = int64_t(body.size());
    rec.width = img->width;
    rec.height = img->height;
    append_record(rec);
  };

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size() || abort.load()) return;
      run_task(tasks[i]);
    }
  };

  std::vector<std::thread> pool;
  int nworkers = std::min<int>(policy.workers, std::max<size_t>(tasks.size(), 1));
  for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (abort.load()) throw IoError("download aborted: " + abort_reason);
}

}  // namespace webcorpus
