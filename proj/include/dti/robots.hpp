#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dti/io.hpp"

namespace dti {

/// Allow/Disallow rules of robots.txt for one user agent (RFC 9309 matching:
/// longest pattern wins, Allow wins ties, `*` and `$` wildcards).
class RobotsRules {
public:
  struct Rule {
    bool allow;
    std::string pattern;
  };

  RobotsRules() = default;

  static RobotsRules parse(std::string_view text, std::string_view user_agent) {
    const std::string product = product_token(user_agent);
    struct Group {
      std::vector<std::string> agents;
      std::vector<Rule> rules;
      std::optional<double> delay;
    };
    std::vector<Group> groups;
    bool collecting_agents = false;

    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      std::string line(text.substr(pos, eol - pos));
      pos = eol + 1;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = lower(trim(line.substr(0, colon)));
      std::string value = trim(line.substr(colon + 1));
      if (key == "user-agent") {
        if (!collecting_agents) groups.emplace_back();
        groups.back().agents.push_back(lower(value));
        collecting_agents = true;
        continue;
      }
      if (groups.empty()) continue;
      collecting_agents = false;
      if (key == "allow" || key == "disallow") {
        if (value.empty()) continue;
        groups.back().rules.push_back({key == "allow", value});
      } else if (key == "crawl-delay") {
        double d;
        if (parse_double(value, d) && d >= 0) groups.back().delay = d;
      }
    }

    RobotsRules out;
    bool matched = false;
    for (const auto& g : groups)
      for (const auto& a : g.agents)
        if (!product.empty() && a == product) {
          matched = true;
          out.merge(g);
          break;
        }
    if (!matched)
      for (const auto& g : groups)
        for (const auto& a : g.agents)
          if (a == "*") {
            out.merge(g);
            break;
          }
    return out;
  }

  bool allowed(std::string_view path_and_query) const {
    if (path_and_query == "/robots.txt") return true;
    std::size_t best_len = 0;
    bool best_allow = true;
    bool any = false;
    for (const auto& r : rules_) {
      if (!matches(r.pattern, path_and_query)) continue;
      const std::size_t len = r.pattern.size();
      if (!any || len > best_len || (len == best_len && r.allow && !best_allow)) {
        best_len = len;
        best_allow = r.allow;
        any = true;
      }
    }
    return !any || best_allow;
  }

  std::optional<double> crawl_delay() const { return delay_; }
  const std::vector<Rule>& rules() const { return rules_; }

  static bool matches(std::string_view pattern, std::string_view path) {
    // Iterative wildcard match with backtracking on the last '*'.
    std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
    while (true) {
      if (p < pattern.size() && pattern[p] == '$' && p + 1 == pattern.size()) return s == path.size();
      if (p == pattern.size()) return true;  // prefix match
      if (pattern[p] == '*') {
        star = p++;
        mark = s;
        continue;
      }
      if (s < path.size() && pattern[p] == path[s]) {
        ++p;
        ++s;
        continue;
      }
      if (star != std::string_view::npos && mark < path.size()) {
        p = star + 1;
        s = ++mark;
        continue;
      }
      return false;
    }
  }

private:
  template <typename G>
  void merge(const G& g) {
    rules_.insert(rules_.end(), g.rules.begin(), g.rules.end());
    if (g.delay) delay_ = delay_ ? std::max(*delay_, *g.delay) : *g.delay;
  }

  static std::string lower(std::string s) {
    for (auto& c : s)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
  }
  static std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
  }
  static std::string product_token(std::string_view ua) {
    std::string t;
    for (char c : ua) {
      if (c == '/' || c == ' ') break;
      t.push_back(c);
    }
    return lower(t);
  }

  std::vector<Rule> rules_;
  std::optional<double> delay_;
};

}  // namespace dti
