#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dti {

namespace utf8 {

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline constexpr char32_t kInvalid = 0xFFFD;

/// Decodes one code point at `pos` and advances it. Malformed sequences consume one
/// byte and yield U+FFFD.
inline char32_t next(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) len = 2, cp = b0 & 0x1F;
  else if ((b0 & 0xF0) == 0xE0) len = 3, cp = b0 & 0x0F;
  else if ((b0 & 0xF8) == 0xF0) len = 4, cp = b0 & 0x07;
  else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kInvalid;
  }
  pos += len;
  return cp;
}

}  // namespace utf8

// ---------------------------------------------------------------------------
// HTML tokenizing

namespace html {

inline bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

inline const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table = {
      {"amp", '&'},       {"lt", '<'},         {"gt", '>'},        {"quot", '"'},       {"apos", '\''},
      {"nbsp", 0xA0},     {"iexcl", 0xA1},     {"cent", 0xA2},     {"pound", 0xA3},     {"euro", 0x20AC},
      {"copy", 0xA9},     {"reg", 0xAE},       {"deg", 0xB0},      {"middot", 0xB7},    {"laquo", 0xAB},
      {"raquo", 0xBB},    {"iquest", 0xBF},    {"ordf", 0xAA},     {"ordm", 0xBA},      {"times", 0xD7},
      {"ndash", 0x2013},  {"mdash", 0x2014},   {"lsquo", 0x2018},  {"rsquo", 0x2019},   {"ldquo", 0x201C},
      {"rdquo", 0x201D},  {"hellip", 0x2026},  {"bull", 0x2022},   {"shy", 0xAD},       {"Agrave", 0xC0},
      {"Aacute", 0xC1},   {"Acirc", 0xC2},     {"Atilde", 0xC3},   {"Auml", 0xC4},      {"Aring", 0xC5},
      {"AElig", 0xC6},    {"Ccedil", 0xC7},    {"Egrave", 0xC8},   {"Eacute", 0xC9},    {"Ecirc", 0xCA},
      {"Euml", 0xCB},     {"Igrave", 0xCC},    {"Iacute", 0xCD},   {"Icirc", 0xCE},     {"Iuml", 0xCF},
      {"Ntilde", 0xD1},   {"Ograve", 0xD2},    {"Oacute", 0xD3},   {"Ocirc", 0xD4},     {"Otilde", 0xD5},
      {"Ouml", 0xD6},     {"Oslash", 0xD8},    {"Ugrave", 0xD9},   {"Uacute", 0xDA},    {"Ucirc", 0xDB},
      {"Uuml", 0xDC},     {"Yacute", 0xDD},    {"szlig", 0xDF},    {"agrave", 0xE0},    {"aacute", 0xE1},
      {"acirc", 0xE2},    {"atilde", 0xE3},    {"auml", 0xE4},     {"aring", 0xE5},     {"aelig", 0xE6},
      {"ccedil", 0xE7},   {"egrave", 0xE8},    {"eacute", 0xE9},   {"ecirc", 0xEA},     {"euml", 0xEB},
      {"igrave", 0xEC},   {"iacute", 0xED},    {"icirc", 0xEE},    {"iuml", 0xEF},      {"ntilde", 0xF1},
      {"ograve", 0xF2},   {"oacute", 0xF3},    {"ocirc", 0xF4},    {"otilde", 0xF5},    {"ouml", 0xF6},
      {"oslash", 0xF8},   {"ugrave", 0xF9},    {"uacute", 0xFA},   {"ucirc", 0xFB},     {"uuml", 0xFC},
      {"yacute", 0xFD},   {"yuml", 0xFF},
  };
  return table;
}

/// Decodes the entity starting at text[pos] == '&'. On success appends UTF-8 and
/// returns the position after it; otherwise appends '&' and returns pos + 1.
inline std::size_t decode_entity(std::string_view text, std::size_t pos, std::string& out) {
  std::size_t i = pos + 1;
  if (i < text.size() && text[i] == '#') {
    ++i;
    const bool hex = i < text.size() && (text[i] == 'x' || text[i] == 'X');
    if (hex) ++i;
    std::size_t start = i;
    std::uint32_t cp = 0;
    while (i < text.size() && i - start < 8) {
      const char c = text[i];
      int d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else break;
      cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      ++i;
    }
    if (i > start) {
      if (i < text.size() && text[i] == ';') ++i;
      if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = utf8::kInvalid;
      utf8::append(out, cp);
      return i;
    }
  } else {
    std::size_t start = i;
    while (i < text.size() && i - start < 10 && (is_ascii_alpha(text[i]) || (text[i] >= '0' && text[i] <= '9'))) ++i;
    const auto& table = named_entities();
    if (auto it = table.find(text.substr(start, i - start)); it != table.end()) {
      if (i < text.size() && text[i] == ';') ++i;
      utf8::append(out, it->second);
      return i;
    }
  }
  out.push_back('&');
  return pos + 1;
}

inline std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '&') i = decode_entity(text, i, out);
    else out.push_back(text[i++]);
  }
  return out;
}

struct Tag {
  std::string name;  // lowercase; "!--" for comments, "!" for declarations
  bool closing = false;
  std::vector<std::pair<std::string, std::string>> attributes;  // lowercase names, decoded values
  std::size_t end = 0;  // one past the closing '>'

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes)
      if (k == key) return &v;
    return nullptr;
  }
};

/// True when text[pos] == '<' opens markup rather than a literal less-than sign.
inline bool starts_markup(std::string_view text, std::size_t pos) {
  if (pos + 1 >= text.size()) return false;
  const char c = text[pos + 1];
  return is_ascii_alpha(c) || c == '/' || c == '!' || c == '?';
}

/// Reads the markup at text[pos] == '<'. Unterminated markup runs to the end of input.
inline Tag read_tag(std::string_view text, std::size_t pos) {
  Tag tag;
  if (text.substr(pos, 4) == "<!--") {
    tag.name = "!--";
    auto close = text.find("-->", pos + 4);
    tag.end = close == std::string_view::npos ? text.size() : close + 3;
    return tag;
  }
  std::size_t i = pos + 1;
  if (text[i] == '!' || text[i] == '?') {
    tag.name = std::string(1, text[i]);
    auto close = text.find('>', i);
    tag.end = close == std::string_view::npos ? text.size() : close + 1;
    return tag;
  }
  if (text[i] == '/') {
    tag.closing = true;
    ++i;
  }
  std::size_t name_start = i;
  while (i < text.size() && !is_space(text[i]) && text[i] != '>' && text[i] != '/') ++i;
  tag.name = to_lower(text.substr(name_start, i - name_start));

  while (i < text.size() && text[i] != '>') {
    if (is_space(text[i]) || text[i] == '/') {
      ++i;
      continue;
    }
    std::size_t key_start = i;
    while (i < text.size() && !is_space(text[i]) && text[i] != '>' && text[i] != '=' && text[i] != '/') ++i;
    std::string key = to_lower(text.substr(key_start, i - key_start));
    while (i < text.size() && is_space(text[i])) ++i;
    std::string value;
    if (i < text.size() && text[i] == '=') {
      ++i;
      while (i < text.size() && is_space(text[i])) ++i;
      if (i < text.size() && (text[i] == '"' || text[i] == '\'')) {
        const char q = text[i++];
        std::size_t close = text.find(q, i);
        if (close == std::string_view::npos) close = text.size();
        value = decode_entities(text.substr(i, close - i));
        i = std::min(close + 1, text.size());
      } else {
        std::size_t vstart = i;
        while (i < text.size() && !is_space(text[i]) && text[i] != '>') ++i;
        value = decode_entities(text.substr(vstart, i - vstart));
      }
    }
    if (key.empty()) {
      ++i;
      continue;
    }
    tag.attributes.emplace_back(std::move(key), std::move(value));
  }
  tag.end = i < text.size() ? i + 1 : text.size();
  return tag;
}

inline bool is_block(std::string_view name) {
  static constexpr std::array<std::string_view, 40> blocks = {
      "address", "article", "aside",  "blockquote", "br",      "caption", "dd",     "div",    "dl",    "dt",
      "fieldset", "figcaption", "figure", "footer", "form",   "h1",      "h2",     "h3",     "h4",    "h5",
      "h6",      "header",  "hr",     "li",         "main",    "nav",     "ol",     "option", "p",     "pre",
      "section", "table",   "tbody",  "td",         "tfoot",   "th",      "thead",  "title",  "tr",    "ul"};
  return std::find(blocks.begin(), blocks.end(), name) != blocks.end();
}

inline bool is_skipped_content(std::string_view name) {
  return name == "script" || name == "style" || name == "head" || name == "noscript" || name == "template" ||
         name == "svg" || name == "iframe" || name == "object";
}

/// Position just past the element that `tag` opened: after `</name>`, or for <head>
/// also at a `<body` start tag. Runs to the end of input when unterminated.
inline std::size_t skip_element(std::string_view text, const Tag& tag) {
  const std::string close = "</" + tag.name;
  std::size_t i = tag.end;
  while (i < text.size()) {
    std::size_t lt = text.find('<', i);
    if (lt == std::string_view::npos) return text.size();
    auto matches = [&](std::string_view needle) {
      if (lt + needle.size() > text.size()) return false;
      for (std::size_t k = 0; k < needle.size(); ++k)
        if (lower(text[lt + k]) != needle[k]) return false;
      const std::size_t after = lt + needle.size();
      return after >= text.size() || is_space(text[after]) || text[after] == '>' || text[after] == '/';
    };
    if (matches(close)) return read_tag(text, lt).end;
    if (tag.name == "head" && matches("<body")) return lt;
    i = lt + 1;
  }
  return text.size();
}

}  // namespace html

/// Visible text of an HTML page: script/style/head contents dropped, block elements
/// become line breaks, entities decoded, whitespace collapsed, blank lines removed.
inline std::string extract_text(std::string_view page) {
  std::string raw;
  raw.reserve(page.size());
  for (std::size_t i = 0; i < page.size();) {
    const char c = page[i];
    if (c == '<' && html::starts_markup(page, i)) {
      html::Tag tag = html::read_tag(page, i);
      if (!tag.closing && html::is_skipped_content(tag.name)) {
        i = html::skip_element(page, tag);
        continue;
      }
      if (html::is_block(tag.name)) raw.push_back('\n');
      else if (tag.name == "img" || tag.name == "input") raw.push_back(' ');
      i = tag.end;
    } else if (c == '&') {
      std::string decoded;
      i = html::decode_entity(page, i, decoded);
      if (decoded == "\xC2\xA0") decoded = " ";
      for (char& d : decoded)
        if (html::is_space(d)) d = ' ';
      raw += decoded;
    } else {
      // Source line breaks are ordinary whitespace; '\n' in `raw` marks block boundaries.
      raw.push_back(html::is_space(c) ? ' ' : c);
      ++i;
    }
  }

  std::string out;
  std::string line;
  auto flush_line = [&] {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (!line.empty()) {
      if (!out.empty()) out.push_back('\n');
      out += line;
    }
    line.clear();
  };
  for (char ch : raw) {
    if (ch == '\n') {
      flush_line();
    } else if (ch == ' ') {
      if (!line.empty() && line.back() != ' ') line.push_back(' ');
    } else {
      line.push_back(ch);
    }
  }
  flush_line();
  return out;
}

/// Absolute or relative targets of <a>/<area> links and the <base> href, in document order.
struct PageLinks {
  std::string base;
  std::vector<std::string> hrefs;
};

inline PageLinks extract_links(std::string_view page) {
  PageLinks links;
  for (std::size_t i = 0; i < page.size();) {
    std::size_t lt = page.find('<', i);
    if (lt == std::string_view::npos) break;
    if (!html::starts_markup(page, lt)) {
      i = lt + 1;
      continue;
    }
    html::Tag tag = html::read_tag(page, lt);
    if (!tag.closing) {
      if (tag.name == "script" || tag.name == "style") {
        i = html::skip_element(page, tag);
        continue;
      }
      if (tag.name == "a" || tag.name == "area") {
        if (const auto* href = tag.attribute("href")) links.hrefs.push_back(*href);
      } else if (tag.name == "base" && links.base.empty()) {
        if (const auto* href = tag.attribute("href")) links.base = *href;
      }
    }
    i = tag.end;
  }
  return links;
}

// ---------------------------------------------------------------------------
// Cleaning and anonymization

inline constexpr std::string_view kOrgPlaceholder = "orgtoken";

namespace text_detail {

// Base letters for U+0100..U+017F; '1' stands for "ij", '2' for "oe".
inline constexpr std::string_view kLatinExtendedA =
    "aaaaaaccccccccddddeeeeeeeeeegggggggghhhhiiiiiiiiii11jjkkkllllllllllnnnnnnnnnoooooo22rrrrrrssssssssttttttuuuuuuuuuuuuwwyyyzzzzzzs";
static_assert(kLatinExtendedA.size() == 0x80);

/// Lowercase ASCII fold of one code point; empty when the character is dropped.
inline std::string_view fold(char32_t cp) {
  static constexpr std::array<std::string_view, 64> latin1 = {
      // U+00C0..U+00FF
      "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
      "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "ss",
      "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
      "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "y"};
  static constexpr std::string_view ascii =
      "................................"
      " !\"#$%&'()*+,-./0123456789:;<=>?"
      "@abcdefghijklmnopqrstuvwxyz[\\]^_"
      "`abcdefghijklmnopqrstuvwxyz{|}~.";
  static_assert(ascii.size() == 128);
  if (cp < 0x80) {
    if (cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v') return " ";
    if (cp < 0x20 || cp == 0x7F) return "";
    return ascii.substr(cp, 1);
  }
  if (cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F || cp == 0x205F || cp == 0x3000 ||
      cp == 0x2028 || cp == 0x2029 || cp == 0x85)
    return " ";
  if (cp == 0x2018 || cp == 0x2019) return "'";
  if (cp == 0x201C || cp == 0x201D) return "\"";
  if (cp >= 0xC0 && cp <= 0xFF) return latin1[cp - 0xC0];
  if (cp >= 0x100 && cp <= 0x17F) {
    const char base = kLatinExtendedA[cp - 0x100];
    if (base == '1') return "ij";
    if (base == '2') return "oe";
    return kLatinExtendedA.substr(cp - 0x100, 1);
  }
  return "";  // combining marks and all other symbols
}

inline bool is_alnum(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

inline bool is_kept(char c) {
  if (is_alnum(c) || c == ' ') return true;
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '\'': case '"': case '(': case ')': case '-':
      return true;
    default:
      return false;
  }
}

inline std::string fold_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) out += fold(utf8::next(text, pos));
  return out;
}

inline bool looks_like_domain_path(std::string_view tok) {
  // host.tld/... : at least one dot before the first slash, label chars only
  auto slash = tok.find('/');
  if (slash == std::string_view::npos || slash == 0) return false;
  auto host = tok.substr(0, slash);
  auto dot = host.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 >= host.size()) return false;
  return std::all_of(host.begin(), host.end(), [](char c) { return is_alnum(c) || c == '.' || c == '-'; });
}

inline bool looks_like_email(std::string_view tok) {
  auto at = tok.find('@');
  if (at == std::string_view::npos || at == 0) return false;
  auto dot = tok.find('.', at + 2);
  return dot != std::string_view::npos && dot + 1 < tok.size();
}

inline bool is_url_token(std::string_view tok) {
  return tok.find("://") != std::string_view::npos || tok.find("www.") != std::string_view::npos ||
         tok.rfind("mailto:", 0) == 0 || looks_like_domain_path(tok) || looks_like_email(tok);
}

/// Drops whitespace-separated tokens that look like URLs.
inline std::string remove_url_tokens(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ') {
      out.push_back(' ');
      ++i;
      continue;
    }
    std::size_t j = text.find(' ', i);
    if (j == std::string_view::npos) j = text.size();
    auto tok = text.substr(i, j - i);
    if (!is_url_token(tok)) out += tok;
    i = j;
  }
  return out;
}

inline std::string filter_chars(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text)
    if (is_kept(c)) out.push_back(c);
  return out;
}

inline std::string collapse_spaces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == ' ') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

/// Everything except anonymization.
inline std::string normalize(std::string_view text) {
  std::string s = fold_text(text);
  s = remove_url_tokens(s);
  s = filter_chars(s);
  s = remove_url_tokens(s);
  return collapse_spaces(s);
}

}  // namespace text_detail

/// Organization names and demonyms to anonymize.
struct Gazetteer {
  struct Entry {
    std::string org_id;
    std::string name;
    std::vector<std::string> demonyms;
  };
  std::vector<Entry> entries;

  /// Normalized terms, longest first, duplicates and empties removed.
  std::vector<std::string> normalized_terms() const {
    std::vector<std::string> terms;
    for (const auto& e : entries) {
      terms.push_back(text_detail::normalize(e.name));
      for (const auto& d : e.demonyms) terms.push_back(text_detail::normalize(d));
    }
    std::erase_if(terms, [](const std::string& t) {
      return std::none_of(t.begin(), t.end(), text_detail::is_alnum);
    });
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
  }
};

/// Replaces whole-word occurrences of `terms` (normalized, longest first) with the placeholder.
inline std::string anonymize(std::string_view text, const std::vector<std::string>& terms) {
  if (terms.empty()) return std::string(text);
  std::array<std::vector<const std::string*>, 256> by_first{};
  for (const auto& t : terms) by_first[static_cast<unsigned char>(t.front())].push_back(&t);

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool at_boundary = i == 0 || !text_detail::is_alnum(text[i - 1]);
    bool replaced = false;
    if (at_boundary) {
      for (const std::string* t : by_first[static_cast<unsigned char>(text[i])]) {
        if (text.compare(i, t->size(), *t) != 0) continue;
        const std::size_t after = i + t->size();
        if (after < text.size() && text_detail::is_alnum(text[after])) continue;
        out += kOrgPlaceholder;
        i = after;
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(text[i++]);
  }
  return out;
}

/// Lowercase, accent-stripped, single-spaced text with URLs, special characters and
/// gazetteer terms removed. Idempotent.
inline std::string clean_text(std::string_view text, const std::vector<std::string>& gazetteer_terms) {
  std::string s = text_detail::normalize(text);
  s = anonymize(s, gazetteer_terms);
  return text_detail::collapse_spaces(s);
}

inline std::string clean_text(std::string_view text, const Gazetteer& gazetteer) {
  return clean_text(text, gazetteer.normalized_terms());
}

}  // namespace dti
