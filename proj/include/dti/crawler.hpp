#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>

#include "dti/csv.hpp"
#include "dti/error.hpp"
#include "dti/html_text.hpp"
#include "dti/io.hpp"
#include "dti/robots.hpp"
#include "dti/url.hpp"

namespace dti {

struct CrawlPolicy {
  int max_depth = 2;
  int max_pages = 200;  // page requests per site, robots.txt excluded
  double per_host_delay = 1.0;  // seconds
  bool respect_robots = true;
  std::string user_agent = "dti-corpus-builder/1.0";
  double timeout = 10.0;  // seconds per request
};

struct FetchResponse {
  int status = 0;  // 0 = transport failure
  std::string content_type;
  std::string body;
  std::string location;  // redirect target, if any
  std::string error;
};

/// Source of HTTP responses. Implementations must be safe to call from several threads.
class Fetcher {
public:
  virtual ~Fetcher() = default;
  virtual FetchResponse get(const Url& url, const CrawlPolicy& policy) = 0;
};

/// Live HTTP(S) via cpp-httplib. Redirects are reported, not followed.
class HttpFetcher final : public Fetcher {
public:
  FetchResponse get(const Url& url, const CrawlPolicy& policy) override {
    FetchResponse out;
    httplib::Client client(url.origin());
    const auto secs = static_cast<time_t>(policy.timeout);
    const auto usecs = static_cast<time_t>((policy.timeout - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_follow_location(false);
    httplib::Headers headers{{"User-Agent", policy.user_agent}, {"Accept", "text/html,application/xhtml+xml"}};
    auto res = client.Get(url.path_and_query(), headers);
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.content_type = res->get_header_value("Content-Type");
    out.location = res->get_header_value("Location");
    out.body = std::move(res->body);
    return out;
  }
};

/// Serves a directory tree as if it were the web: `<root>/<host>[_<port>]/<path>`, with
/// `index.html` for directory paths. Unknown files are 404. Used for offline runs.
class FixtureFetcher final : public Fetcher {
public:
  explicit FixtureFetcher(std::filesystem::path root) : root_(std::move(root)) {}

  FetchResponse get(const Url& url, const CrawlPolicy&) override {
    FetchResponse out;
    std::string host_dir = url.host + (url.port >= 0 ? "_" + std::to_string(url.port) : "");
    std::string rel = url.path;
    if (rel.empty() || rel.back() == '/') rel += "index.html";
    if (rel.find("..") != std::string::npos) {
      out.status = 400;
      return out;
    }
    std::filesystem::path file = root_ / host_dir / rel.substr(1);
    std::error_code ec;
    if (std::filesystem::is_directory(file, ec)) file /= "index.html";
    if (!std::filesystem::is_regular_file(file, ec)) {
      if (!std::filesystem::is_directory(root_ / host_dir, ec)) {
        out.error = "unknown host '" + url.host + "'";
        return out;
      }
      out.status = 404;
      out.content_type = "text/html";
      return out;
    }
    out.status = 200;
    out.body = read_file(file);
    out.content_type = content_type_for(file.extension().string());
    return out;
  }

  static std::string content_type_for(const std::string& ext) {
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".txt") return "text/plain";
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".pdf") return "application/pdf";
    if (ext == ".css") return "text/css";
    if (ext == ".js") return "application/javascript";
    return "application/octet-stream";
  }

private:
  std::filesystem::path root_;
};

/// Time source for politeness waits. Seconds since the clock was created.
class Clock {
public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_until(double t) = 0;
};

class SteadyClock final : public Clock {
public:
  double now() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void sleep_until(double t) override {
    for (double wait = t - now(); wait > 0; wait = t - now())
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Simulated time: sleeping advances the clock instantly. Gives reproducible fetch logs
/// for fixture crawls.
class VirtualClock final : public Clock {
public:
  double now() override {
    std::lock_guard lock(mutex_);
    return t_;
  }
  void sleep_until(double t) override {
    std::lock_guard lock(mutex_);
    t_ = std::max(t_, t);
  }

private:
  std::mutex mutex_;
  double t_ = 0.0;
};

/// Serializes requests per host so consecutive request starts are at least `delay` apart.
/// Returns the start time granted to the caller.
class HostGate {
public:
  double wait(const std::string& host, double delay, Clock& clock) {
    for (;;) {
      double target;
      {
        std::lock_guard lock(mutex_);
        const double now = clock.now();
        auto it = next_.find(host);
        if (it == next_.end() || now >= it->second) {
          next_[host] = now + delay;
          return now;
        }
        target = it->second;
      }
      clock.sleep_until(target);
    }
  }

private:
  std::mutex mutex_;
  std::map<std::string, double> next_;
};

struct FetchLogEntry {
  double timestamp = 0.0;  // clock seconds when the request was issued
  std::string url;
  int status = 0;
  int depth = 0;  // -1 for robots.txt
  std::size_t bytes = 0;
};

struct CrawledPage {
  std::string url;
  int depth = 0;
  std::string html;  // UTF-8
};

struct CrawlResult {
  std::vector<CrawledPage> pages;
  std::vector<FetchLogEntry> log;
  std::vector<std::string> warnings;
  std::vector<std::string> disallowed;  // links skipped because robots.txt forbids them
};

inline bool is_html_content_type(std::string_view ct) {
  std::string t = html::to_lower(ct.substr(0, ct.find(';')));
  while (!t.empty() && t.back() == ' ') t.pop_back();
  return t == "text/html" || t == "application/xhtml+xml";
}

/// Re-encodes single-byte Latin-1 / Windows-1252 pages as UTF-8 when the response or the
/// page declares such a charset. Other charsets are passed through.
inline std::string to_utf8(std::string body, std::string_view content_type) {
  auto declared = [](std::string_view s) -> std::string {
    std::string l = html::to_lower(s);
    auto p = l.find("charset=");
    if (p == std::string::npos) return {};
    p += 8;
    while (p < l.size() && (l[p] == '"' || l[p] == '\'')) ++p;
    auto e = l.find_first_of("\"'; >/", p);
    return l.substr(p, e == std::string::npos ? std::string::npos : e - p);
  };
  std::string cs = declared(content_type);
  if (cs.empty()) cs = declared(std::string_view(body).substr(0, 2048));
  if (cs != "iso-8859-1" && cs != "latin1" && cs != "windows-1252" && cs != "iso-8859-15") return body;
  std::string out;
  out.reserve(body.size() + body.size() / 8);
  for (unsigned char c : body) utf8::append(out, c);
  return out;
}

/// Breadth-first crawl from `seed`, restricted to the seed's registrable domain.
/// Throws DataError when the seed itself cannot be fetched.
inline CrawlResult crawl(const Url& seed, const CrawlPolicy& policy, Fetcher& fetcher, Clock& clock, HostGate& gate) {
  if (policy.max_depth < 0) throw ValidationError("max_depth must be nonnegative");
  if (policy.max_pages < 1) throw ValidationError("max_pages must be positive");
  CrawlResult result;
  std::map<std::string, RobotsRules> robots;

  auto host_key = [](const Url& u) { return u.origin(); };
  auto effective_delay = [&](const Url& u) {
    double d = policy.per_host_delay;
    if (auto it = robots.find(host_key(u)); it != robots.end() && it->second.crawl_delay())
      d = std::max(d, *it->second.crawl_delay());
    return d;
  };
  auto rules_for = [&](const Url& u) -> const RobotsRules& {
    auto key = host_key(u);
    if (auto it = robots.find(key); it != robots.end()) return it->second;
    Url robots_url = u;
    robots_url.path = "/robots.txt";
    robots_url.query.clear();
    FetchLogEntry entry{gate.wait(key, policy.per_host_delay, clock), robots_url.str(), 0, -1, 0};
    FetchResponse res = fetcher.get(robots_url, policy);
    entry.status = res.status;
    entry.bytes = res.body.size();
    result.log.push_back(entry);
    RobotsRules rules;
    if (res.status >= 200 && res.status < 300) rules = RobotsRules::parse(res.body, policy.user_agent);
    return robots.emplace(key, std::move(rules)).first->second;
  };

  std::deque<std::pair<Url, int>> queue;
  std::set<std::string> seen;
  queue.emplace_back(seed, 0);
  seen.insert(seed.str());
  int requests = 0;
  bool seed_done = false;

  auto enqueue = [&](const Url& u, int depth) {
    if (depth > policy.max_depth || !same_site(u, seed)) return;
    if (seen.insert(u.str()).second) queue.emplace_back(u, depth);
  };

  while (!queue.empty() && requests < policy.max_pages) {
    auto [url, depth] = queue.front();
    queue.pop_front();
    const bool is_seed = !seed_done;
    seed_done = true;

    if (policy.respect_robots && !rules_for(url).allowed(url.path_and_query())) {
      if (is_seed) throw DataError("seed '" + url.str() + "' is disallowed by robots.txt");
      result.disallowed.push_back(url.str());
      continue;
    }

    FetchLogEntry entry{gate.wait(host_key(url), effective_delay(url), clock), url.str(), 0, depth, 0};
    FetchResponse res = fetcher.get(url, policy);
    ++requests;
    entry.status = res.status;
    entry.bytes = res.body.size();
    result.log.push_back(entry);

    if (res.status == 0 || res.status >= 400) {
      std::string why = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
      if (is_seed) throw DataError("cannot fetch seed '" + url.str() + "': " + why);
      result.warnings.push_back("fetch failed for " + url.str() + ": " + why);
      continue;
    }
    if (res.status >= 300 && res.status < 400) {
      if (auto target = resolve_url(url, res.location)) {
        // A redirect does not add link distance.
        if (is_seed) seed_done = false;
        if (target->str() != url.str()) enqueue(*target, depth);
      }
      continue;
    }
    if (!is_html_content_type(res.content_type)) continue;

    std::string page = to_utf8(std::move(res.body), res.content_type);
    if (depth < policy.max_depth) {
      PageLinks links = extract_links(page);
      Url base = url;
      if (!links.base.empty())
        if (auto b = resolve_url(url, links.base)) base = *b;
      for (const auto& href : links.hrefs)
        if (auto target = resolve_url(base, href)) enqueue(*target, depth + 1);
    }
    result.pages.push_back({url.str(), depth, std::move(page)});
  }
  return result;
}

inline std::string format_fetch_log(const std::vector<FetchLogEntry>& log) {
  std::string out = csv::format_row({"timestamp", "url", "status", "depth", "bytes"});
  char ts[32];
  for (const auto& e : log) {
    std::snprintf(ts, sizeof ts, "%.3f", e.timestamp);
    out += csv::format_row({ts, e.url, std::to_string(e.status), std::to_string(e.depth), std::to_string(e.bytes)});
  }
  return out;
}

}  // namespace dti
