#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dti {

/// An absolute http(s) URL in canonical form: lowercase scheme and host, no default
/// port, no fragment, non-empty path with dot segments resolved.
struct Url {
  std::string scheme;
  std::string host;
  int port = -1;  // -1 = scheme default
  std::string path = "/";
  std::string query;  // without '?'; empty when absent

  int effective_port() const { return port >= 0 ? port : (scheme == "https" ? 443 : 80); }

  std::string origin() const {
    std::string out = scheme + "://" + host;
    if (port >= 0) out += ":" + std::to_string(port);
    return out;
  }

  std::string path_and_query() const { return query.empty() ? path : path + "?" + query; }

  std::string str() const { return origin() + path_and_query(); }

  friend bool operator==(const Url&, const Url&) = default;
};

namespace url_detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

/// RFC 3986 section 5.2.4.
inline std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> out;
  const bool absolute = !path.empty() && path.front() == '/';
  std::size_t i = absolute ? 1 : 0;
  bool trailing_slash = false;
  while (i <= path.size()) {
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    std::string_view seg = path.substr(i, j - i);
    const bool last = j == path.size();
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing_slash = last;
    } else if (seg == ".") {
      trailing_slash = last;
    } else {
      out.push_back(seg);
      trailing_slash = false;
    }
    i = j + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) result += '/';
    result += out[k];
  }
  if (trailing_slash && !result.empty() && result.back() != '/') result += '/';
  return result.empty() ? "/" : result;
}

inline std::string strip_fragment(std::string_view s) {
  auto h = s.find('#');
  return std::string(h == std::string_view::npos ? s : s.substr(0, h));
}

}  // namespace url_detail

/// Parses an absolute http or https URL. Anything else yields std::nullopt.
inline std::optional<Url> parse_url(std::string_view text) {
  std::string s = url_detail::strip_fragment(url_detail::trim(text));
  auto colon = s.find("://");
  if (colon == std::string::npos) return std::nullopt;
  Url u;
  u.scheme = url_detail::lower(s.substr(0, colon));
  if (u.scheme != "http" && u.scheme != "https") return std::nullopt;
  std::size_t auth_start = colon + 3;
  std::size_t auth_end = s.find_first_of("/?", auth_start);
  if (auth_end == std::string::npos) auth_end = s.size();
  std::string authority = s.substr(auth_start, auth_end - auth_start);
  if (auto at = authority.rfind('@'); at != std::string::npos) authority = authority.substr(at + 1);
  std::string host = authority;
  if (auto pc = authority.rfind(':'); pc != std::string::npos && authority.find(']') == std::string::npos) {
    host = authority.substr(0, pc);
    std::string port = authority.substr(pc + 1);
    if (!port.empty()) {
      if (port.size() > 5 || !std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
      u.port = std::stoi(port);
      if (u.port > 65535) return std::nullopt;
    }
  }
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) return std::nullopt;
  u.host = url_detail::lower(host);
  if ((u.scheme == "http" && u.port == 80) || (u.scheme == "https" && u.port == 443)) u.port = -1;
  std::string rest = s.substr(auth_end);
  auto q = rest.find('?');
  std::string path = q == std::string::npos ? rest : rest.substr(0, q);
  if (q != std::string::npos) u.query = rest.substr(q + 1);
  u.path = url_detail::remove_dot_segments(path.empty() ? "/" : path);
  return u;
}

/// Resolves a link found on `base` (RFC 3986 reference resolution).
inline std::optional<Url> resolve_url(const Url& base, std::string_view reference) {
  std::string ref = url_detail::strip_fragment(url_detail::trim(reference));
  if (ref.empty()) return base;
  auto scheme_end = ref.find(':');
  auto first_delim = ref.find_first_of("/?");
  if (scheme_end != std::string::npos && (first_delim == std::string::npos || scheme_end < first_delim)) {
    // Has a scheme: only absolute http(s) survive; mailto:, javascript:, tel: are dropped.
    return parse_url(ref);
  }
  if (ref.rfind("//", 0) == 0) return parse_url(base.scheme + ":" + ref);
  Url u = base;
  if (ref.front() == '/') {
    auto q = ref.find('?');
    u.path = url_detail::remove_dot_segments(ref.substr(0, q));
    u.query = q == std::string::npos ? "" : ref.substr(q + 1);
    return u;
  }
  if (ref.front() == '?') {
    u.query = ref.substr(1);
    return u;
  }
  auto q = ref.find('?');
  std::string rel = ref.substr(0, q);
  std::string dir = base.path.substr(0, base.path.rfind('/') + 1);
  u.path = url_detail::remove_dot_segments(dir + rel);
  u.query = q == std::string::npos ? "" : ref.substr(q + 1);
  return u;
}

/// Approximates the registrable domain (eTLD+1) without a public-suffix list: the last
/// two labels, or three when the second-to-last is a common second-level registry label.
inline std::string registrable_domain(std::string_view host) {
  std::string h(host);
  const bool numeric = std::all_of(h.begin(), h.end(), [](char c) { return (c >= '0' && c <= '9') || c == '.'; });
  if (numeric || h.find(':') != std::string::npos || h.find('.') == std::string::npos) return h;
  std::vector<std::string> labels;
  std::size_t i = 0;
  while (i <= h.size()) {
    auto j = h.find('.', i);
    if (j == std::string::npos) j = h.size();
    labels.push_back(h.substr(i, j - i));
    i = j + 1;
  }
  static const std::vector<std::string> second_level = {"co", "com", "org", "net", "gov", "gob", "edu",
                                                        "ac", "nom", "es", "info"};
  std::size_t keep = 2;
  if (labels.size() >= 3 && labels.back().size() == 2 &&
      std::find(second_level.begin(), second_level.end(), labels[labels.size() - 2]) != second_level.end())
    keep = 3;
  keep = std::min(keep, labels.size());
  std::string out;
  for (std::size_t k = labels.size() - keep; k < labels.size(); ++k) {
    if (!out.empty()) out += '.';
    out += labels[k];
  }
  return out;
}

inline bool same_site(const Url& a, const Url& b) { return registrable_domain(a.host) == registrable_domain(b.host); }

}  // namespace dti
