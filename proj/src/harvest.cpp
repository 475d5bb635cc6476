#include "jobskill/harvest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <span>
#include <thread>
#include <variant>

#include "httplib.h"
#include "jobskill/text.hpp"

namespace jobskill::harvest {

namespace {

constexpr std::string_view kListFields[] = {"education", "locations", "key_skills", "salary"};
constexpr std::string_view kIntFields[] = {"apply_count", "view_count", "min_experience", "max_experience", "vacancy"};

bool is_one_of(std::string_view key, std::span<const std::string_view> set) {
  return std::find(set.begin(), set.end(), key) != set.end();
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && to_lower_ascii(s.substr(0, prefix.size())) == prefix;
}

}  // namespace

std::vector<std::string> CrawlConfig::check() const {
  std::vector<std::string> errors;
  if (trim(root_url).empty()) errors.push_back("harvest.root: must not be empty");
  if (slug(key_phrase).empty()) errors.push_back("harvest.key_phrase: must contain a letter or digit");
  if (max_workers < 1) errors.push_back("harvest.workers: must be at least 1");
  if (!(max_requests_per_worker_per_sec > 0.0) || !std::isfinite(max_requests_per_worker_per_sec)) {
    errors.push_back("harvest.rate: must be a positive number");
  }
  if (max_pages && *max_pages < 1) errors.push_back("harvest.max_pages: must be at least 1");
  if (retries < 0) errors.push_back("harvest.retries: must not be negative");
  return errors;
}

std::string slug(std::string_view key_phrase) {
  std::string out;
  bool dash = false;
  for (unsigned char c : key_phrase) {
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(c)));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out;
}

std::string normalize_root(std::string_view root) {
  root = trim(root);
  std::string out;
  if (starts_with_ci(root, "http://") || starts_with_ci(root, "https://") || starts_with_ci(root, "file://")) {
    out = std::string(root);
  } else {
    out = "file://" + std::filesystem::absolute(std::filesystem::path(root)).lexically_normal().generic_string();
  }
  if (out.empty() || out.back() != '/') out.push_back('/');
  return out;
}

std::string entry_url(const CrawlConfig& config) {
  return normalize_root(config.root_url) + "search/" + slug(config.key_phrase) + "/page-1.html";
}

namespace {

struct UrlParts {
  std::string scheme;     // "http:"
  std::string authority;  // "//host:port" or "//" or empty
  std::string path;
  std::string query;  // including '?'
};

UrlParts split_url(std::string_view url) {
  UrlParts parts;
  if (auto hash = url.find('#'); hash != std::string_view::npos) url = url.substr(0, hash);
  auto colon = url.find(':');
  auto first_sep = url.find_first_of("/?");
  if (colon != std::string_view::npos && colon > 0 && (first_sep == std::string_view::npos || colon < first_sep)) {
    parts.scheme = std::string(url.substr(0, colon + 1));
    url.remove_prefix(colon + 1);
  }
  if (url.substr(0, 2) == "//") {
    auto end = url.find_first_of("/?", 2);
    if (end == std::string_view::npos) end = url.size();
    parts.authority = std::string(url.substr(0, end));
    url.remove_prefix(end);
  }
  if (auto q = url.find('?'); q != std::string_view::npos) {
    parts.query = std::string(url.substr(q));
    url = url.substr(0, q);
  }
  parts.path = std::string(url);
  return parts;
}

std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string> out;
  const bool absolute = !path.empty() && path.front() == '/';
  auto segments = split(path, '/');
  if (absolute && !segments.empty()) segments.erase(segments.begin());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const bool last = i + 1 == segments.size();
    if (seg == ".") {
      if (last) out.emplace_back();
    } else if (seg == "..") {
      if (!out.empty()) out.pop_back();
      if (last) out.emplace_back();
    } else {
      out.push_back(seg);
    }
  }
  std::string joined = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) joined += '/';
    joined += out[i];
  }
  return joined;
}

}  // namespace

std::string resolve_url(std::string_view base, std::string_view href) {
  href = trim(href);
  UrlParts b = split_url(base);
  UrlParts r = split_url(href);
  UrlParts t;
  if (!r.scheme.empty()) {
    t = r;
    t.path = remove_dot_segments(r.path);
  } else if (!r.authority.empty()) {
    t = r;
    t.scheme = b.scheme;
    t.path = remove_dot_segments(r.path);
  } else {
    t.scheme = b.scheme;
    t.authority = b.authority;
    if (r.path.empty()) {
      t.path = b.path;
      t.query = r.query.empty() ? b.query : r.query;
    } else {
      if (r.path.front() == '/') {
        t.path = remove_dot_segments(r.path);
      } else {
        std::string merged;
        if (!b.authority.empty() && b.path.empty()) {
          merged = "/" + r.path;
        } else {
          auto slash = b.path.rfind('/');
          merged = (slash == std::string::npos ? std::string() : b.path.substr(0, slash + 1)) + r.path;
        }
        t.path = remove_dot_segments(merged);
      }
      t.query = r.query;
    }
  }
  return t.scheme + t.authority + t.path + t.query;
}

// ---------------------------------------------------------------------------
// HTML

std::vector<Tag> scan_tags(std::string_view html) {
  std::vector<Tag> tags;
  bool markup = false;
  std::size_t i = 0;
  const std::size_t n = html.size();
  auto is_name_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':'; };
  while (i < n) {
    auto lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    if (html.substr(lt, 4) == "<!--") {
      auto close = html.find("-->", lt + 4);
      i = close == std::string_view::npos ? n : close + 3;
      markup = true;
      continue;
    }
    if (lt + 1 < n && (html[lt + 1] == '!' || html[lt + 1] == '?')) {
      auto close = html.find('>', lt);
      i = close == std::string_view::npos ? n : close + 1;
      markup = true;
      continue;
    }
    Tag tag;
    tag.begin = lt;
    std::size_t p = lt + 1;
    if (p < n && html[p] == '/') {
      tag.closing = true;
      ++p;
    }
    std::size_t name_begin = p;
    while (p < n && is_name_char(html[p])) ++p;
    if (p == name_begin || !std::isalpha(static_cast<unsigned char>(html[name_begin]))) {
      i = lt + 1;
      continue;
    }
    tag.name = to_lower_ascii(html.substr(name_begin, p - name_begin));
    while (p < n && html[p] != '>') {
      if (std::isspace(static_cast<unsigned char>(html[p]))) {
        ++p;
        continue;
      }
      if (html[p] == '/') {
        tag.self_closing = p + 1 < n && html[p + 1] == '>';
        ++p;
        continue;
      }
      std::size_t attr_begin = p;
      while (p < n && !std::isspace(static_cast<unsigned char>(html[p])) && html[p] != '=' && html[p] != '>' &&
             !(html[p] == '/' && p + 1 < n && html[p + 1] == '>')) {
        ++p;
      }
      std::string attr = to_lower_ascii(html.substr(attr_begin, p - attr_begin));
      while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
      std::string value;
      if (p < n && html[p] == '=') {
        ++p;
        while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
        if (p < n && (html[p] == '"' || html[p] == '\'')) {
          char quote = html[p++];
          auto close = html.find(quote, p);
          if (close == std::string_view::npos) close = n;
          value = std::string(html.substr(p, close - p));
          p = std::min(n, close + 1);
        } else {
          std::size_t value_begin = p;
          while (p < n && !std::isspace(static_cast<unsigned char>(html[p])) && html[p] != '>') ++p;
          value = std::string(html.substr(value_begin, p - value_begin));
        }
      }
      if (!attr.empty()) tag.attributes.emplace(std::move(attr), decode_entities(value));
    }
    tag.end = std::min(n, p + 1);
    markup = true;
    i = tag.end;
    const bool raw_text = !tag.closing && (tag.name == "script" || tag.name == "style");
    const std::string raw_name = tag.name;
    tags.push_back(std::move(tag));
    if (raw_text) {
      auto close = to_lower_ascii(html.substr(i)).find("</" + raw_name);
      i = close == std::string::npos ? n : i + close;
    }
  }
  if (!markup) throw ParseError("payload is not HTML: no markup found");
  return tags;
}

std::string decode_entities(std::string_view text) {
  static const std::map<std::string_view, std::string_view> named = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    auto semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view entity = text.substr(i + 1, semi - i - 1);
    if (auto it = named.find(entity); it != named.end()) {
      out += it->second;
      i = semi;
      continue;
    }
    if (entity.size() > 1 && entity.front() == '#') {
      std::uint32_t code = 0;
      bool hex = entity[1] == 'x' || entity[1] == 'X';
      auto digits = entity.substr(hex ? 2 : 1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
      if (ec == std::errc{} && ptr == digits.data() + digits.size() && code > 0 && code <= 0x10FFFF) {
        if (code < 0x80) {
          out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
          out.push_back(static_cast<char>(0xC0 | (code >> 6)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
          out.push_back(static_cast<char>(0xE0 | (code >> 12)));
          out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
          out.push_back(static_cast<char>(0xF0 | (code >> 18)));
          out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
          out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        }
        i = semi;
        continue;
      }
    }
    out.push_back('&');
  }
  return out;
}

namespace {

bool has_class(const Tag& tag, std::string_view cls) {
  auto it = tag.attributes.find("class");
  if (it == tag.attributes.end()) return false;
  for (const auto& c : split(normalize_text(it->second), ' '))
    if (c == cls) return true;
  return false;
}

// Text between two offsets with markup removed and entities decoded.
std::string inner_text(std::string_view html, const std::vector<Tag>& tags, std::size_t from, std::size_t to,
                       std::size_t first_tag) {
  std::string raw;
  std::size_t pos = from;
  for (std::size_t t = first_tag; t < tags.size() && tags[t].begin < to; ++t) {
    if (tags[t].begin < pos) continue;
    raw += html.substr(pos, tags[t].begin - pos);
    pos = tags[t].end;
  }
  if (pos < to) raw += html.substr(pos, to - pos);
  return std::string(trim(decode_entities(raw)));
}

// Index of the tag closing tags[open], or tags.size() when it is never closed.
std::size_t matching_close(const std::vector<Tag>& tags, std::size_t open) {
  int depth = 0;
  for (std::size_t t = open + 1; t < tags.size(); ++t) {
    if (tags[t].name != tags[open].name || tags[t].self_closing) continue;
    if (!tags[t].closing) {
      ++depth;
    } else if (depth == 0) {
      return t;
    } else {
      --depth;
    }
  }
  return tags.size();
}

}  // namespace

Listing parse_listing(std::string_view html) {
  const auto tags = scan_tags(html);
  Listing listing;
  for (const auto& tag : tags) {
    if (tag.closing || tag.name != "a") continue;
    auto href = tag.attributes.find("href");
    if (href == tag.attributes.end() || trim(href->second).empty()) continue;
    if (has_class(tag, "job-link")) {
      listing.ad_urls.push_back(std::string(trim(href->second)));
    } else if (!listing.next) {
      auto rel = tag.attributes.find("rel");
      if (has_class(tag, "next") || (rel != tag.attributes.end() && normalize_text(rel->second) == "next")) {
        listing.next = std::string(trim(href->second));
      }
    }
  }
  return listing;
}

nlohmann::json parse_ad_json(std::string_view html) {
  const auto tags = scan_tags(html);
  nlohmann::json record = nlohmann::json::object();
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const auto& tag = tags[t];
    if (tag.closing) continue;
    auto attr = tag.attributes.find("data-field");
    if (attr == tag.attributes.end()) continue;
    const std::string field = normalize_text(attr->second);
    if (field.empty() || record.contains(field)) continue;
    std::size_t close = tag.self_closing ? t : matching_close(tags, t);
    std::size_t content_end = close < tags.size() ? tags[close].begin : html.size();
    if (tag.self_closing) content_end = tag.end;

    if (is_one_of(field, kListFields)) {
      nlohmann::json items = nlohmann::json::array();
      for (std::size_t q = t + 1; q < close && q < tags.size(); ++q) {
        if (tags[q].closing || tags[q].name != "li") continue;
        std::size_t item_end = content_end;
        for (std::size_t e = q + 1; e < close && e < tags.size(); ++e) {
          if (tags[e].name == "li") {
            item_end = tags[e].begin;
            break;
          }
        }
        auto text = inner_text(html, tags, tags[q].end, item_end, q + 1);
        if (!text.empty()) items.push_back(text);
      }
      record[field] = items;
      continue;
    }
    auto text = inner_text(html, tags, tag.end, content_end, t + 1);
    if (is_one_of(field, kIntFields)) {
      if (text.empty()) continue;
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc{} && ptr == text.data() + text.size()) {
        record[field] = v;
      } else {
        record[field] = text;
      }
    } else if (!text.empty()) {
      record[field] = text;
    }
  }
  return record;
}

corpus::JobAd parse_ad(std::string_view html) { return corpus::job_ad_from_json(parse_ad_json(html)); }

// ---------------------------------------------------------------------------
// Fetching

Fetcher file_fetcher() {
  return [](const std::string& url) -> std::string {
    if (!starts_with_ci(url, "file://")) throw FetchError("not a file URL: " + url);
    auto parts = split_url(url);
    std::filesystem::path path(parts.path);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw FetchError("no such page: " + url);
    try {
      return read_file(path);
    } catch (const IoError& e) {
      throw FetchError(e.what());
    }
  };
}

Fetcher http_fetcher(std::chrono::milliseconds timeout) {
  return [timeout](const std::string& url) -> std::string {
    if (!starts_with_ci(url, "http://")) throw FetchError("unsupported URL scheme: " + url);
    auto parts = split_url(url);
    httplib::Client client("http:" + parts.authority);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    auto target = (parts.path.empty() ? std::string("/") : parts.path) + parts.query;
    auto response = client.Get(target);
    if (!response) throw FetchError(url + ": " + httplib::to_string(response.error()));
    if (response->status != 200) throw FetchError(url + ": HTTP " + std::to_string(response->status));
    return response->body;
  };
}

Fetcher default_fetcher() {
  return [file = file_fetcher(), http = http_fetcher()](const std::string& url) {
    return starts_with_ci(url, "file://") ? file(url) : http(url);
  };
}

// ---------------------------------------------------------------------------
// Throttling

TokenBucket::TokenBucket(double rate, Clock::time_point start)
    : interval_(std::chrono::nanoseconds(static_cast<std::int64_t>(std::ceil(1e9 / rate)))), next_(start) {}

void TokenBucket::commit(Clock::time_point issued) { next_ = std::max(next_, issued + interval_); }

WindowLimiter::WindowLimiter(std::size_t limit, std::chrono::nanoseconds window) : limit_(limit), window_(window) {}

Clock::time_point WindowLimiter::issue() {
  std::lock_guard lock(mutex_);
  if (recent_.size() >= limit_) {
    auto allowed = recent_.front() + window_;
    while (Clock::now() < allowed) std::this_thread::sleep_until(allowed);
    recent_.pop_front();
  }
  auto now = Clock::now();
  recent_.push_back(now);
  return now;
}

std::vector<std::size_t> CrawlStats::per_second() const {
  std::vector<std::size_t> bins;
  for (const auto& r : requests) {
    auto second = static_cast<std::size_t>(r.at_ns / 1'000'000'000);
    if (bins.size() <= second) bins.resize(second + 1, 0);
    ++bins[second];
  }
  return bins;
}

std::size_t CrawlStats::max_in_window(std::int64_t w) const {
  std::vector<std::int64_t> times;
  for (const auto& r : requests) times.push_back(r.at_ns);
  std::sort(times.begin(), times.end());
  std::size_t best = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < times.size(); ++hi) {
    while (times[hi] - times[lo] >= w) ++lo;
    best = std::max(best, hi - lo + 1);
  }
  return best;
}

std::size_t CrawlStats::duplicate_fetches() const {
  std::map<std::string, std::size_t> ok;
  for (const auto& r : requests)
    if (r.ok) ++ok[r.url];
  std::size_t dup = 0;
  for (const auto& [url, count] : ok) dup += count - 1;
  return dup;
}

nlohmann::json to_json(const CrawlStats& stats) {
  nlohmann::json requests = nlohmann::json::array();
  for (const auto& r : stats.requests) {
    requests.push_back({{"at_ns", r.at_ns}, {"attempt", r.attempt}, {"ok", r.ok}, {"url", r.url}, {"worker", r.worker}});
  }
  return {{"cap_per_second", stats.cap},
          {"duplicate_fetches", stats.duplicate_fetches()},
          {"elapsed_seconds", stats.elapsed},
          {"fetches", stats.fetches()},
          {"max_in_window", stats.max_in_window(stats.window_ns)},
          {"max_in_one_second", stats.max_in_window(1'000'000'000)},
          {"per_second", stats.per_second()},
          {"requests", requests},
          {"window_limit", stats.window_limit},
          {"window_ns", stats.window_ns}};
}

// ---------------------------------------------------------------------------
// Crawling

namespace {

struct Task {
  enum Kind { listing, ad } kind = ad;
  std::string url;
  std::size_t index = 0;  // discovery index for ads, page number for listings
};

class Frontier {
 public:
  // Returns false when the URL was seen before.
  bool push(Task task, bool front) {
    std::lock_guard lock(mutex_);
    if (!seen_.insert(task.url).second) return false;
    if (task.kind == Task::ad) {
      task.index = discovered_.size();
      discovered_.push_back(task.url);
    }
    if (front) {
      queue_.push_front(std::move(task));
    } else {
      queue_.push_back(std::move(task));
    }
    ready_.notify_one();
    return true;
  }

  std::optional<Task> pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return stopped_ || !queue_.empty() || in_flight_ == 0; });
    if (stopped_ || queue_.empty()) return std::nullopt;
    Task task = std::move(queue_.front());
    queue_.pop_front();
    ++in_flight_;
    return task;
  }

  void done() {
    std::lock_guard lock(mutex_);
    --in_flight_;
    ready_.notify_all();
  }

  void stop() {
    std::lock_guard lock(mutex_);
    stopped_ = true;
    ready_.notify_all();
  }

  std::vector<std::string> discovered() const {
    std::lock_guard lock(mutex_);
    return discovered_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Task> queue_;
  std::set<std::string> seen_;
  std::vector<std::string> discovered_;
  std::size_t in_flight_ = 0;
  bool stopped_ = false;
};

}  // namespace

CrawlResult crawl(const CrawlConfig& config, const Fetcher& fetch) {
  if (auto errors = config.check(); !errors.empty()) {
    std::string message = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) message += "; " + errors[i];
    throw ConfigError(message);
  }
  const double cap = config.max_workers * config.max_requests_per_worker_per_sec;
  const double window_seconds = std::max(1.0, 1.0 / cap);
  const auto window = std::chrono::nanoseconds(static_cast<std::int64_t>(std::ceil(window_seconds * 1e9)));
  const auto limit = static_cast<std::size_t>(std::max(1.0, std::floor(cap * window_seconds + 1e-9)));

  const auto start = Clock::now();
  WindowLimiter limiter(limit, window);
  Frontier frontier;
  std::mutex sink_mutex;
  std::map<std::size_t, std::variant<corpus::JobAd, Skipped>> sink;
  std::vector<RequestRecord> log;
  std::optional<std::string> fatal;
  std::vector<std::string> warnings;

  frontier.push({Task::listing, entry_url(config), 1}, true);

  auto worker = [&](int id) {
    TokenBucket bucket(config.max_requests_per_worker_per_sec, start);
    auto fetch_with_retries = [&](const std::string& url) -> std::variant<std::string, std::string> {
      std::string last_error;
      for (int attempt = 0; attempt <= config.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config.backoff * (1 << (attempt - 1)));
        std::this_thread::sleep_until(bucket.ready_at());
        auto issued = limiter.issue();
        bucket.commit(issued);
        RequestRecord record{std::chrono::duration_cast<std::chrono::nanoseconds>(issued - start).count(), id, url,
                             attempt, false};
        std::optional<std::string> body;
        try {
          body = fetch(url);
          record.ok = true;
        } catch (const std::exception& e) {
          last_error = e.what();
        }
        {
          std::lock_guard lock(sink_mutex);
          log.push_back(record);
        }
        if (body) return std::variant<std::string, std::string>(std::in_place_index<0>, std::move(*body));
      }
      return std::variant<std::string, std::string>(std::in_place_index<1>, last_error);
    };

    while (auto task = frontier.pop()) {
      auto fetched = fetch_with_retries(task->url);
      if (task->kind == Task::listing) {
        if (fetched.index() == 1) {
          std::lock_guard lock(sink_mutex);
          if (task->index == 1) {
            fatal = "crawl root unreachable: " + std::get<1>(fetched);
            frontier.stop();
          } else {
            warnings.push_back("listing page " + task->url + " skipped: " + std::get<1>(fetched));
          }
        } else {
          try {
            auto listing = parse_listing(std::get<0>(fetched));
            for (const auto& href : listing.ad_urls) frontier.push({Task::ad, resolve_url(task->url, href), 0}, false);
            const bool more_pages = !config.max_pages || static_cast<int>(task->index) < *config.max_pages;
            if (!listing.ad_urls.empty() && listing.next && more_pages) {
              frontier.push({Task::listing, resolve_url(task->url, *listing.next), task->index + 1}, true);
            }
          } catch (const Error& e) {
            std::lock_guard lock(sink_mutex);
            if (task->index == 1) {
              fatal = std::string("crawl root is not a listing page: ") + e.what();
              frontier.stop();
            } else {
              warnings.push_back("listing page " + task->url + " dropped: " + e.what());
            }
          }
        }
      } else {
        std::variant<corpus::JobAd, Skipped> outcome;
        if (fetched.index() == 1) {
          outcome = Skipped{task->url, "fetch failed after " + std::to_string(config.retries) +
                                           " retries: " + std::get<1>(fetched)};
        } else {
          try {
            outcome = parse_ad(std::get<0>(fetched));
          } catch (const Error& e) {
            outcome = Skipped{task->url, std::string("parse failed: ") + e.what()};
          } catch (const std::exception& e) {
            outcome = Skipped{task->url, std::string("parse failed: ") + e.what()};
          }
        }
        std::lock_guard lock(sink_mutex);
        sink.emplace(task->index, std::move(outcome));
      }
      frontier.done();
    }
  };

  if (config.max_workers == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < config.max_workers; ++w) pool.emplace_back(worker, w);
  }

  if (fatal) throw IoError(*fatal);

  CrawlResult result;
  result.discovered = frontier.discovered();
  result.warnings = std::move(warnings);
  for (auto& [index, outcome] : sink) {
    if (auto* ad = std::get_if<corpus::JobAd>(&outcome)) {
      result.documents.push_back(std::move(*ad));
    } else {
      result.skipped.push_back(std::get<Skipped>(std::move(outcome)));
    }
  }
  std::stable_sort(log.begin(), log.end(), [](const auto& a, const auto& b) { return a.at_ns < b.at_ns; });
  result.stats.requests = std::move(log);
  result.stats.cap = cap;
  result.stats.window_ns = window.count();
  result.stats.window_limit = limit;
  result.stats.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

CrawlResult crawl(const CrawlConfig& config) { return crawl(config, default_fetcher()); }

// ---------------------------------------------------------------------------
// Fixture sites

namespace {

std::string escape_html(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void scalar(std::string& out, std::string_view tag, std::string_view field, std::string_view value) {
  if (value.empty()) return;
  out += "<" + std::string(tag) + " data-field=\"" + std::string(field) + "\">" + escape_html(value) + "</" +
         std::string(tag) + ">\n";
}

void list(std::string& out, std::string_view field, const std::vector<std::string>& items) {
  if (items.empty()) return;
  out += "<ul data-field=\"" + std::string(field) + "\">\n";
  for (const auto& item : items) out += "  <li>" + escape_html(item) + "</li>\n";
  out += "</ul>\n";
}

void number(std::string& out, std::string_view field, const std::optional<std::int64_t>& value) {
  if (value) scalar(out, "span", field, std::to_string(*value));
}

}  // namespace

std::string render_listing(const std::vector<std::string>& ad_hrefs, std::optional<std::string> next_href) {
  std::string out = "<!DOCTYPE html>\n<html><head><title>Search results</title></head><body>\n<ol class=\"results\">\n";
  for (const auto& href : ad_hrefs) {
    out += "  <li><a class=\"job-link\" href=\"" + escape_html(href) + "\">advertisement</a></li>\n";
  }
  out += "</ol>\n";
  if (next_href) out += "<a class=\"next\" rel=\"next\" href=\"" + escape_html(*next_href) + "\">Next</a>\n";
  out += "</body></html>\n";
  return out;
}

std::string render_ad(const corpus::JobAd& ad) {
  std::string out = "<!DOCTYPE html>\n<html><head><title>" + escape_html(ad.job_name) + "</title></head><body>\n";
  scalar(out, "span", "id", ad.id);
  scalar(out, "h1", "job_name", ad.job_name);
  scalar(out, "div", "company_name", ad.company_name);
  if (ad.advertisement_date) scalar(out, "time", "advertisement_date", corpus::format_date(*ad.advertisement_date));
  number(out, "apply_count", ad.apply_count);
  number(out, "view_count", ad.view_count);
  scalar(out, "div", "role_category", ad.role_category);
  list(out, "education", ad.education);
  scalar(out, "div", "industry", ad.industry);
  number(out, "min_experience", ad.min_experience);
  number(out, "max_experience", ad.max_experience);
  scalar(out, "div", "employment_type", ad.employment_type);
  scalar(out, "div", "functional_area", ad.functional_area);
  list(out, "locations", ad.locations);
  list(out, "key_skills", ad.key_skills);
  number(out, "vacancy", ad.vacancy);
  list(out, "salary", ad.salary);
  scalar(out, "div", "description", ad.description);
  out += "</body></html>\n";
  return out;
}

void write_fixture_site(const std::filesystem::path& dir, const corpus::Corpus& corpus, std::size_t per_page,
                        std::string_view key_phrase) {
  if (per_page < 1) throw ConfigError("fixture site: ads per page must be at least 1");
  const auto listing_dir = dir / "search" / slug(key_phrase);
  const std::size_t n = corpus.size();
  const std::size_t pages = std::max<std::size_t>(1, (n + per_page - 1) / per_page);
  char name[32];
  for (std::size_t p = 0; p < pages; ++p) {
    std::vector<std::string> hrefs;
    for (std::size_t i = p * per_page; i < std::min(n, (p + 1) * per_page); ++i) {
      std::snprintf(name, sizeof name, "ad-%06zu.html", i + 1);
      hrefs.push_back(std::string("../../ads/") + name);
      write_file(dir / "ads" / name, render_ad(corpus.ads[i]));
    }
    std::optional<std::string> next;
    if (p + 1 < pages) next = "page-" + std::to_string(p + 2) + ".html";
    write_file(listing_dir / ("page-" + std::to_string(p + 1) + ".html"), render_listing(hrefs, next));
  }
}

}  // namespace jobskill::harvest
