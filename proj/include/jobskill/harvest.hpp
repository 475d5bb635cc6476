#pragma once

// Crawler for job-portal fixture sites: listing pages are walked along their
// pagination chain, ad pages are fetched by a bounded worker pool behind a
// throttle and parsed into JobAd documents.

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jobskill/corpus.hpp"
#include "jobskill/error.hpp"

namespace jobskill::harvest {

class FetchError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

struct CrawlConfig {
  // http://host:port/prefix/ or file:///dir/ or a plain directory path.
  std::string root_url;
  std::string key_phrase;
  int max_workers = 1;
  double max_requests_per_worker_per_sec = 1.0;
  std::optional<int> max_pages;
  int retries = 2;
  std::chrono::milliseconds backoff{50};

  // Empty when valid; otherwise one message per violated constraint.
  std::vector<std::string> check() const;
};

// "Data Scientist" -> "data-scientist"
std::string slug(std::string_view key_phrase);

// Root URL with a trailing '/', plain paths turned into file:// URLs.
std::string normalize_root(std::string_view root);
std::string entry_url(const CrawlConfig& config);

// Resolves href against the page it appears on (RFC 3986 reference
// resolution for the hierarchical schemes used here).
std::string resolve_url(std::string_view base, std::string_view href);

// ---------------------------------------------------------------------------
// HTML scanning

struct Tag {
  std::string name;  // lowercase
  std::map<std::string, std::string> attributes;
  bool closing = false;
  bool self_closing = false;
  std::size_t begin = 0;  // offset of '<'
  std::size_t end = 0;    // offset one past '>'
};

// All tags in document order; comments, doctype and script/style bodies are
// skipped. Throws ParseError when the payload contains no markup.
std::vector<Tag> scan_tags(std::string_view html);

std::string decode_entities(std::string_view text);

struct Listing {
  std::vector<std::string> ad_urls;  // document order, as written
  std::optional<std::string> next;
};

// Ad anchors carry class "job-link"; the pagination link has class "next" or
// rel="next".
Listing parse_listing(std::string_view html);

// Reads elements labelled data-field="<name>"; list fields hold <li> items.
// The JSON object is validated with the corpus schema, so a missing mandatory
// field raises SchemaError naming it.
nlohmann::json parse_ad_json(std::string_view html);
corpus::JobAd parse_ad(std::string_view html);

// ---------------------------------------------------------------------------
// Fetching

// Returns the body or throws FetchError.
using Fetcher = std::function<std::string(const std::string& url)>;

Fetcher file_fetcher();
Fetcher http_fetcher(std::chrono::milliseconds timeout = std::chrono::seconds(5));
// file:// URLs go to the file fetcher, http:// to the HTTP one.
Fetcher default_fetcher();

// ---------------------------------------------------------------------------
// Throttling

using Clock = std::chrono::steady_clock;

// Capacity-one bucket refilled at `rate` tokens per second. The bucket starts
// full; commit() spends the token at the time the request actually went out.
class TokenBucket {
 public:
  TokenBucket(double rate, Clock::time_point start);
  Clock::time_point ready_at() const { return next_; }
  void commit(Clock::time_point issued);

 private:
  std::chrono::nanoseconds interval_;
  Clock::time_point next_;
};

// At most `limit` issues in any half-open window of length `window`.
// issue() blocks until a slot is free and returns the recorded issue time.
class WindowLimiter {
 public:
  WindowLimiter(std::size_t limit, std::chrono::nanoseconds window);
  Clock::time_point issue();

 private:
  std::size_t limit_;
  std::chrono::nanoseconds window_;
  std::deque<Clock::time_point> recent_;
  std::mutex mutex_;
};

struct RequestRecord {
  std::int64_t at_ns = 0;  // since crawl start
  int worker = 0;
  std::string url;
  int attempt = 0;
  bool ok = false;
};

struct CrawlStats {
  std::vector<RequestRecord> requests;  // in issue order
  double cap = 0;                       // max_workers * rate, requests per second
  std::int64_t window_ns = 0;           // limiter window
  std::size_t window_limit = 0;         // issues allowed per limiter window
  double elapsed = 0;                   // seconds

  std::size_t fetches() const { return requests.size(); }
  // Requests per whole second since the start.
  std::vector<std::size_t> per_second() const;
  // Largest number of requests in any half-open interval [t, t + w).
  std::size_t max_in_window(std::int64_t window_ns) const;
  // Successful fetches of a URL beyond its first.
  std::size_t duplicate_fetches() const;
};

nlohmann::json to_json(const CrawlStats& stats);

// ---------------------------------------------------------------------------
// Crawling

struct Skipped {
  std::string url;
  std::string reason;
};

struct CrawlResult {
  std::vector<corpus::JobAd> documents;  // discovery order
  std::vector<Skipped> skipped;
  std::vector<std::string> discovered;  // unique ad URLs, discovery order
  std::vector<std::string> warnings;    // listing pages that failed after the first
  CrawlStats stats;
};

// Throws ConfigError for an invalid config and IoError when the entry page
// cannot be fetched.
CrawlResult crawl(const CrawlConfig& config, const Fetcher& fetch);
CrawlResult crawl(const CrawlConfig& config);

// ---------------------------------------------------------------------------
// Fixture sites

std::string render_listing(const std::vector<std::string>& ad_hrefs, std::optional<std::string> next_href);
std::string render_ad(const corpus::JobAd& ad);

// Writes search/<slug>/page-N.html listing pages with `per_page` ads each
// and ads/<id>.html pages. An empty corpus yields a single empty listing.
void write_fixture_site(const std::filesystem::path& dir, const corpus::Corpus& corpus, std::size_t per_page,
                        std::string_view key_phrase);

}  // namespace jobskill::harvest
