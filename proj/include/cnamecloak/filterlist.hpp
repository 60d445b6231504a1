// filterlist.hpp
//
// Adblock-syntax filter lists (EasyPrivacy / AdGuard style) reduced to
// the subset needed for domain matching: "||" domain anchors, "|"
// anchors, "*" wildcards, "^" separators, "@@" exceptions and "$option"
// suffixes.  Cosmetic and regex rules are kept as unsupported and never
// match.

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cnamecloak/domain.hpp"
#include "cnamecloak/error.hpp"

namespace cnamecloak {

enum class rule_kind { domain_anchor, plain, exception, unsupported };

inline const char* to_string(rule_kind k) {
  switch (k) {
    case rule_kind::domain_anchor: return "domain_anchor";
    case rule_kind::plain: return "plain";
    case rule_kind::exception: return "exception";
    case rule_kind::unsupported: return "unsupported";
  }
  return "unsupported";
}

struct filter_rule {
  std::string raw;
  rule_kind kind = rule_kind::unsupported;
  // normalized pattern body: anchors stripped into the flags below,
  // '*' and '^' kept as wildcard/separator tokens
  std::string pattern;
  bool domain_anchored = false;  // "||" (also set for "@@||" exceptions)
  bool start_anchored = false;   // single "|"
  bool end_anchored = false;     // trailing "|"
  std::vector<std::string> options;
};

namespace detail {

inline const std::unordered_set<std::string>& known_options() {
  static const std::unordered_set<std::string> opts{
      "third-party", "~third-party", "first-party", "~first-party", "script", "~script",
      "image", "~image", "stylesheet", "~stylesheet", "xmlhttprequest", "~xmlhttprequest",
      "subdocument", "~subdocument", "document", "~document", "object", "~object",
      "ping", "~ping", "media", "~media", "font", "~font", "websocket", "~websocket",
      "other", "~other", "popup", "important", "match-case", "all", "network"};
  return opts;
}

inline bool is_separator(char c) {
  auto u = static_cast<unsigned char>(c);
  return !(std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '%');
}

inline bool is_domain_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '-' || c == '.' || c == '_';
}

/// Wildcard match of a whole pattern against a whole text.  '*' matches
/// any run, '^' matches one separator character or the end of text.
inline bool glob_match(std::string_view pat, std::string_view text) {
  const std::size_t m = pat.size(), n = text.size();
  // reach[j]: pattern prefix of length i matches text prefix of length j
  std::vector<char> reach(n + 1, 0), next(n + 1, 0);
  reach[0] = 1;
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(next.begin(), next.end(), 0);
    const char p = pat[i];
    if (p == '*') {
      char any = 0;
      for (std::size_t j = 0; j <= n; ++j) {
        any |= reach[j];
        next[j] = any;
      }
    } else {
      for (std::size_t j = 0; j <= n; ++j) {
        if (!reach[j]) continue;
        if (j < n) {
          bool ok = p == '^' ? is_separator(text[j])
                             : std::tolower(static_cast<unsigned char>(p)) == std::tolower(static_cast<unsigned char>(text[j]));
          if (ok) next[j + 1] = 1;
        }
        if (p == '^' && j == n) next[j] = 1;
      }
    }
    std::swap(reach, next);
  }
  return reach[n] != 0;
}

}  // namespace detail

/// Parses one rule line.  Total: anything outside the supported subset
/// becomes rule_kind::unsupported.
inline filter_rule parse_rule(std::string_view line) {
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
  filter_rule rule;
  rule.raw = std::string(line);
  if (line.empty() || line.front() == '!' || line.front() == '[') return rule;
  if (line.find("##") != std::string_view::npos || line.find("#@#") != std::string_view::npos ||
      line.find("#?#") != std::string_view::npos || line.find("#$#") != std::string_view::npos ||
      line.find("#%#") != std::string_view::npos)
    return rule;

  std::string_view body = line;
  bool exception = false;
  if (body.rfind("@@", 0) == 0) {
    exception = true;
    body.remove_prefix(2);
  }
  if (auto dollar = body.rfind('$'); dollar != std::string_view::npos) {
    std::string_view opts = body.substr(dollar + 1);
    body = body.substr(0, dollar);
    std::size_t start = 0;
    while (start <= opts.size()) {
      auto comma = opts.find(',', start);
      if (comma == std::string_view::npos) comma = opts.size();
      std::string tok = normalize_host(opts.substr(start, comma - start));
      if (detail::known_options().count(tok)) rule.options.push_back(tok);
      start = comma + 1;
    }
  }
  // regex rules
  if (body.size() >= 2 && body.front() == '/' && body.back() == '/') return rule;

  if (body.rfind("||", 0) == 0) {
    rule.domain_anchored = true;
    body.remove_prefix(2);
  } else if (body.rfind("|", 0) == 0) {
    rule.start_anchored = true;
    body.remove_prefix(1);
  }
  if (!body.empty() && body.back() == '|') {
    rule.end_anchored = true;
    body.remove_suffix(1);
  }
  if (body.empty() || body.find('|') != std::string_view::npos) return rule;

  // collapse runs of '*'
  for (char c : body) {
    if (c == '*' && !rule.pattern.empty() && rule.pattern.back() == '*') continue;
    rule.pattern += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (exception)
    rule.kind = rule_kind::exception;
  else if (rule.domain_anchored)
    rule.kind = rule_kind::domain_anchor;
  else
    rule.kind = rule_kind::plain;
  return rule;
}

/// True when rule's pattern matches the normalized domain.
inline bool rule_matches(const filter_rule& rule, std::string_view fqdn) {
  if (rule.kind == rule_kind::unsupported) return false;
  std::string pat = rule.pattern;
  if (!rule.end_anchored && (pat.empty() || pat.back() != '*')) pat += '*';
  if (rule.domain_anchored) {
    // start at position 0 or right after a '.'
    for (std::size_t pos = 0; pos < fqdn.size(); ++pos) {
      if (pos != 0 && fqdn[pos - 1] != '.') continue;
      if (detail::glob_match(pat, fqdn.substr(pos))) return true;
    }
    return false;
  }
  if (!rule.start_anchored && pat.front() != '*') pat.insert(pat.begin(), '*');
  return detail::glob_match(pat, fqdn);
}

/// Per-kind rule counts, reported after parsing.
struct rule_counts {
  std::size_t domain_anchor = 0, plain = 0, exception = 0, unsupported = 0;
};

class filter_list {
public:
  filter_list() = default;

  /// Parses a whole list.  Blank lines carry no rule and are dropped.
  static filter_list parse(std::string_view text, std::string source_name) {
    filter_list list;
    list.source_name_ = std::move(source_name);
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      auto line = text.substr(start, nl - start);
      start = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      list.add(parse_rule(line));
    }
    return list;
  }

  static filter_list load(const std::string& path, std::string source_name = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open filter list " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    if (source_name.empty()) {
      auto slash = path.find_last_of('/');
      source_name = slash == std::string::npos ? path : path.substr(slash + 1);
    }
    return parse(ss.str(), std::move(source_name));
  }

  void add(filter_rule rule) {
    const std::size_t id = rules_.size();
    switch (rule.kind) {
      case rule_kind::domain_anchor: ++counts_.domain_anchor; break;
      case rule_kind::plain: ++counts_.plain; break;
      case rule_kind::exception: ++counts_.exception; break;
      case rule_kind::unsupported: ++counts_.unsupported; break;
    }
    if (rule.kind != rule_kind::unsupported) {
      if (auto key = index_key(rule); !key.empty())
        domain_index_[key].push_back(id);
      else
        linear_.push_back(id);
    }
    if (rule.kind == rule_kind::domain_anchor) {
      auto literal = leading_domain(rule.pattern);
      auto labels = split_labels(literal);
      if (labels.size() >= 3 && !labels.front().empty()) blacklisted_prefixes_.insert(labels.front());
    }
    rules_.push_back(std::move(rule));
  }

  /// First matching block rule in file order, or nullptr.  Any matching
  /// exception rule suppresses the result.
  const filter_rule* match_domain(std::string_view raw) const {
    const auto fqdn = normalize_host(raw);
    auto ids = candidates(fqdn);
    if (any_exception(ids, fqdn)) return nullptr;
    return first_block(ids, fqdn);
  }

  bool exception_matches(std::string_view raw) const {
    const auto fqdn = normalize_host(raw);
    return any_exception(candidates(fqdn), fqdn);
  }
  const filter_rule* block_match(std::string_view raw) const {
    const auto fqdn = normalize_host(raw);
    return first_block(candidates(fqdn), fqdn);
  }

  /// prefix equals the leftmost label of a domain-anchor rule that names
  /// at least three labels
  bool prefix_in_blacklist(std::string_view prefix) const {
    return blacklisted_prefixes_.count(normalize_host(prefix)) > 0;
  }

  const std::vector<filter_rule>& rules() const { return rules_; }
  const std::string& source_name() const { return source_name_; }
  const rule_counts& counts() const { return counts_; }
  std::size_t indexed_rule_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : domain_index_) n += v.size();
    return n;
  }
  std::size_t linear_rule_count() const { return linear_.size(); }

private:
  /// longest prefix made only of domain characters
  static std::string leading_domain(const std::string& pattern) {
    std::size_t i = 0;
    while (i < pattern.size() && detail::is_domain_char(pattern[i])) ++i;
    return pattern.substr(0, i);
  }

  /// "||example.com^..." is indexed under example.com; everything else
  /// goes to the linear list.
  static std::string index_key(const filter_rule& rule) {
    if (!rule.domain_anchored) return {};
    auto literal = leading_domain(rule.pattern);
    if (literal.empty() || literal.front() == '.' || literal.back() == '.') return {};
    const bool bounded = literal.size() == rule.pattern.size() ? rule.end_anchored : rule.pattern[literal.size()] == '^';
    return bounded ? literal : std::string{};
  }

  bool any_exception(const std::vector<std::size_t>& ids, std::string_view fqdn) const {
    return std::any_of(ids.begin(), ids.end(), [&](std::size_t id) {
      return rules_[id].kind == rule_kind::exception && rule_matches(rules_[id], fqdn);
    });
  }

  const filter_rule* first_block(const std::vector<std::size_t>& ids, std::string_view fqdn) const {
    for (auto id : ids)
      if (rules_[id].kind != rule_kind::exception && rule_matches(rules_[id], fqdn)) return &rules_[id];
    return nullptr;
  }

  /// '.' is not a separator, so an indexed "||d^" can only match d or a
  /// name ending in ".d": looking up every suffix is enough.
  std::vector<std::size_t> candidates(std::string_view fqdn) const {
    std::vector<std::size_t> ids(linear_.begin(), linear_.end());
    for (std::size_t pos = 0; pos != std::string_view::npos;) {
      if (auto it = domain_index_.find(std::string(fqdn.substr(pos))); it != domain_index_.end())
        ids.insert(ids.end(), it->second.begin(), it->second.end());
      pos = fqdn.find('.', pos);
      if (pos != std::string_view::npos) ++pos;
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  std::string source_name_;
  std::vector<filter_rule> rules_;
  std::unordered_map<std::string, std::vector<std::size_t>> domain_index_;
  std::vector<std::size_t> linear_;
  std::unordered_set<std::string> blacklisted_prefixes_;
  rule_counts counts_;
};

inline filter_list parse_list(std::string_view text, std::string source_name) {
  return filter_list::parse(text, std::move(source_name));
}

inline const filter_rule* match_domain(const filter_list& list, std::string_view fqdn) {
  return list.match_domain(fqdn);
}

inline bool prefix_in_blacklist(const filter_list& list, std::string_view prefix) {
  return list.prefix_in_blacklist(prefix);
}

/// First block match across several lists in list order.  An exception
/// in any list suppresses blocks from every list.
struct list_match {
  const filter_rule* rule = nullptr;
  const filter_list* list = nullptr;
  explicit operator bool() const { return rule != nullptr; }
};

inline list_match match_any(std::span<const filter_list> lists, std::string_view fqdn) {
  for (const auto& l : lists)
    if (l.exception_matches(fqdn)) return {};
  for (const auto& l : lists)
    if (const auto* r = l.block_match(fqdn)) return {r, &l};
  return {};
}

}  // namespace cnamecloak
