#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "doctest.h"
#include "httplib.h"
#include "jobskill/corpus.hpp"
#include "jobskill/error.hpp"
#include "jobskill/harvest.hpp"
#include "jobskill/text.hpp"
#include "support/fixtures.hpp"

using namespace jobskill;
using namespace jobskill::harvest;

namespace {

corpus::Corpus numbered_ads(std::size_t n) {
  std::vector<corpus::JobAd> ads;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = fixture::ad("ad-" + std::to_string(i + 1), "Data Scientist", {"python", "sql"});
    a.locations = {"Mumbai", "Pune"};
    a.vacancy = static_cast<std::int64_t>(i % 7);
    ads.push_back(std::move(a));
  }
  return fixture::corpus_of(std::move(ads));
}

CrawlConfig site_config(const fixture::TempDir& dir, int workers = 1, double rate = 1000) {
  CrawlConfig c;
  c.root_url = dir.path().string();
  c.key_phrase = "data scientist";
  c.max_workers = workers;
  c.max_requests_per_worker_per_sec = rate;
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

std::vector<std::string> ids(const CrawlResult& r) {
  std::vector<std::string> out;
  for (const auto& d : r.documents) out.push_back(d.id);
  return out;
}

}  // namespace

TEST_CASE("url helpers") {
  CHECK(slug("Data Scientist") == "data-scientist");
  CHECK(normalize_root("http://127.0.0.1:8080/site") == "http://127.0.0.1:8080/site/");
  CHECK(normalize_root("/tmp/site").rfind("file:///tmp/site/", 0) == 0);
  CHECK(resolve_url("file:///s/search/data/page-1.html", "../../ads/ad-1.html") == "file:///s/ads/ad-1.html");
  CHECK(resolve_url("http://h:1/a/b.html", "c.html") == "http://h:1/a/c.html");
  CHECK(resolve_url("http://h:1/a/b.html", "/x/y.html") == "http://h:1/x/y.html");
  CHECK(resolve_url("http://h:1/a/b.html", "http://other/z") == "http://other/z");
}

TEST_CASE("listing with three ad anchors") {
  auto page = render_listing({"a1.html", "a2.html", "a3.html"}, std::string("page-2.html"));
  auto l = parse_listing(page);
  CHECK(l.ad_urls == std::vector<std::string>{"a1.html", "a2.html", "a3.html"});
  CHECK(l.next == "page-2.html");
}

TEST_CASE("terminal listing page") {
  auto l = parse_listing(render_listing({}, std::nullopt));
  CHECK(l.ad_urls.empty());
  CHECK_FALSE(l.next);
}

TEST_CASE("non html payload") {
  CHECK_THROWS_AS(parse_listing("just some text without markup"), ParseError);
}

TEST_CASE("duplicate anchors are fetched once") {
  fixture::TempDir dir;
  auto c = numbered_ads(1);
  write_file(dir / "ads/one.html", render_ad(c.ads[0]));
  write_file(dir / "search/data-scientist/page-1.html", render_listing({"../../ads/one.html", "../../ads/one.html"}, {}));
  auto r = crawl(site_config(dir));
  CHECK(r.discovered.size() == 1);
  CHECK(r.documents.size() == 1);
  CHECK(r.stats.fetches() == 2);
  CHECK(r.stats.duplicate_fetches() == 0);
}

TEST_CASE("ad page round trip") {
  corpus::JobAd a = fixture::ad("x1", "Senior Data Scientist", {"python", "machine learning"});
  a.company_name = "Acme & Sons";
  a.advertisement_date = std::chrono::year{2021} / std::chrono::August / std::chrono::day{4};
  a.apply_count = 120;
  a.view_count = 800;
  a.role_category = "Programming & Design";
  a.education = {"B.Tech", "M.Tech"};
  a.industry = "IT-Software, Software Services";
  a.min_experience = 2;
  a.max_experience = 5;
  a.employment_type = "full time";
  a.functional_area = "analytics";
  a.locations = {"Bangalore(Whitefield)", "Pune"};
  a.vacancy = 3;
  a.salary = {"not disclosed"};
  a.description = "Build <models> & \"pipelines\".";
  auto back = parse_ad(render_ad(a));
  CHECK(back == a);
  CHECK(back.locations == std::vector<std::string>{"Bangalore(Whitefield)", "Pune"});
}

TEST_CASE("ad page without key skills is rejected by name") {
  auto page = render_ad(fixture::ad("x", "t", {"a"}));
  auto begin = page.find("<ul data-field=\"key_skills\"");
  REQUIRE(begin != std::string::npos);
  auto end = page.find("</ul>", begin) + 5;
  page.erase(begin, end - begin);
  try {
    parse_ad(page);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("key_skills") != std::string::npos);
  }
}

TEST_CASE("empty site makes one request") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), fixture::corpus_of({}), 20, "data scientist");
  auto r = crawl(site_config(dir));
  CHECK(r.documents.empty());
  CHECK(r.stats.fetches() == 1);
}

TEST_CASE("five listing pages of twenty ads") {
  fixture::TempDir dir;
  auto c = numbered_ads(100);
  write_fixture_site(dir.path(), c, 20, "data scientist");
  auto r = crawl(site_config(dir, 4, 500));
  CHECK(r.documents.size() == 100);
  CHECK(r.stats.fetches() == 105);
  CHECK(r.stats.duplicate_fetches() == 0);
  CHECK(r.skipped.empty());
  // discovery order is preserved whatever the worker interleaving
  std::vector<std::string> expected;
  for (const auto& a : c.ads) expected.push_back(a.id);
  CHECK(ids(r) == expected);
}

TEST_CASE("max pages stops pagination") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), numbered_ads(50), 10, "data scientist");
  auto config = site_config(dir);
  config.max_pages = 2;
  auto r = crawl(config);
  CHECK(r.documents.size() == 20);
  CHECK(r.stats.fetches() == 22);
}

TEST_CASE("rate cap of two per second on one worker") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), numbered_ads(9), 20, "data scientist");
  auto r = crawl(site_config(dir, 1, 2.0));
  REQUIRE(r.stats.fetches() == 10);
  CHECK(r.stats.elapsed >= 4.5);
  CHECK(r.stats.max_in_window(1'000'000'000) <= 2);
  for (std::size_t i = 1; i < r.stats.requests.size(); ++i) {
    CHECK(r.stats.requests[i].at_ns - r.stats.requests[i - 1].at_ns >= 500'000'000);
  }
}

TEST_CASE("failed fetches are retried then skipped") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), numbered_ads(6), 20, "data scientist");
  auto files = file_fetcher();
  std::mutex m;
  std::map<std::string, int> attempts;
  Fetcher flaky = [&](const std::string& url) {
    int n;
    {
      std::lock_guard lock(m);
      n = ++attempts[url];
    }
    if (url.find("ad-000002") != std::string::npos && n == 1) throw FetchError("transient");
    if (url.find("ad-000004") != std::string::npos) throw FetchError("gone");
    return files(url);
  };
  auto r = crawl(site_config(dir), flaky);
  CHECK(r.documents.size() == 5);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].url.find("ad-000004") != std::string::npos);
  for (const auto& [url, n] : attempts) {
    if (url.find("ad-000004") != std::string::npos) CHECK(n == 3);
    if (url.find("ad-000002") != std::string::npos) CHECK(n == 2);
  }
  CHECK(r.stats.fetches() == 7 + 1 + 2);
}

TEST_CASE("unparseable ad pages are dropped") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), numbered_ads(3), 20, "data scientist");
  write_file(dir / "ads/ad-000002.html", "<html><body><p>removed</p></body></html>");
  auto r = crawl(site_config(dir));
  CHECK(r.documents.size() == 2);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason.find("parse failed") == 0);
}

TEST_CASE("unreachable root") {
  fixture::TempDir dir;
  CHECK_THROWS_AS(crawl(site_config(dir)), IoError);
}

TEST_CASE("invalid crawl config") {
  fixture::TempDir dir;
  auto c = site_config(dir);
  c.max_workers = 0;
  c.max_requests_per_worker_per_sec = -1;
  CHECK(c.check().size() == 2);
  CHECK_THROWS_AS(crawl(c), ConfigError);
}

TEST_CASE("window limiter never exceeds its limit") {
  WindowLimiter limiter(3, std::chrono::milliseconds(100));
  std::vector<Clock::time_point> issued;
  std::mutex m;
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 4; ++i) {
          auto at = limiter.issue();
          std::lock_guard lock(m);
          issued.push_back(at);
        }
      });
    }
  }
  std::sort(issued.begin(), issued.end());
  for (std::size_t i = 3; i < issued.size(); ++i) CHECK(issued[i] - issued[i - 3] >= std::chrono::milliseconds(100));
}

TEST_CASE("crawl over loopback http") {
  fixture::TempDir dir;
  auto c = numbered_ads(12);
  write_fixture_site(dir.path(), c, 5, "data scientist");
  httplib::Server server;
  REQUIRE(server.set_mount_point("/site", dir.path().string()));
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  CrawlConfig config;
  config.root_url = "http://127.0.0.1:" + std::to_string(port) + "/site";
  config.key_phrase = "Data Scientist";
  config.max_workers = 3;
  config.max_requests_per_worker_per_sec = 100;
  auto r = crawl(config);
  server.stop();
  thread.join();

  CHECK(r.documents.size() == 12);
  CHECK(r.stats.fetches() == 15);
  CHECK(r.documents == c.ads);
}

TEST_CASE("loopback port without a server") {
  // bind an ephemeral port, then release it so nothing listens there
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  int port = ntohs(addr.sin_port);
  ::close(fd);
  CrawlConfig config;
  config.root_url = "http://127.0.0.1:" + std::to_string(port) + "/";
  config.key_phrase = "x";
  config.retries = 0;
  CHECK_THROWS_AS(crawl(config), IoError);
}

TEST_CASE("single worker crawls in a fixed order") {
  fixture::TempDir dir;
  write_fixture_site(dir.path(), numbered_ads(30), 7, "data scientist");
  auto a = crawl(site_config(dir));
  auto b = crawl(site_config(dir));
  std::vector<std::string> ua, ub;
  for (const auto& r : a.stats.requests) ua.push_back(r.url);
  for (const auto& r : b.stats.requests) ub.push_back(r.url);
  CHECK(ua == ub);
  CHECK(ids(a) == ids(b));
}
