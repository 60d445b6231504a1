// domain.hpp
//
// Host-name utilities: normalization, URL host extraction and
// registrable-domain (eTLD+1) computation from a public suffix list.

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cnamecloak/error.hpp"

namespace cnamecloak {

/// lowercase, strip surrounding whitespace and one trailing dot
inline std::string normalize_host(std::string_view host) {
  while (!host.empty() && std::isspace(static_cast<unsigned char>(host.front()))) host.remove_prefix(1);
  while (!host.empty() && std::isspace(static_cast<unsigned char>(host.back()))) host.remove_suffix(1);
  if (!host.empty() && host.back() == '.') host.remove_suffix(1);
  std::string out(host);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::vector<std::string> split_labels(std::string_view host) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start <= host.size()) {
    auto dot = host.find('.', start);
    if (dot == std::string_view::npos) dot = host.size();
    labels.emplace_back(host.substr(start, dot - start));
    start = dot + 1;
  }
  return labels;
}

inline bool is_ip_literal(std::string_view host) {
  if (host.find(':') != std::string_view::npos) return true;  // ipv6
  if (host.empty()) return false;
  return std::all_of(host.begin(), host.end(),
                     [](char c) { return c == '.' || std::isdigit(static_cast<unsigned char>(c)); });
}

/// Parsed components of an absolute URL; only what the pipeline needs.
struct url_parts {
  std::string scheme;
  std::string host;  // normalized, brackets stripped for ipv6
  std::string port;
  std::string path_and_query;
};

/// Parses scheme://[userinfo@]host[:port][/...].  Throws url_error when
/// there is no scheme or the host is empty.
inline url_parts parse_url(std::string_view url) {
  url_parts parts;
  auto colon = url.find("://");
  if (colon == std::string_view::npos || colon == 0) throw url_error("missing scheme in '" + std::string(url) + "'");
  for (char c : url.substr(0, colon)) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
      throw url_error("bad scheme in '" + std::string(url) + "'");
  }
  parts.scheme = normalize_host(url.substr(0, colon));
  auto rest = url.substr(colon + 3);
  auto auth_end = rest.find_first_of("/?#");
  auto authority = rest.substr(0, auth_end);
  parts.path_and_query = auth_end == std::string_view::npos ? std::string{} : std::string(rest.substr(auth_end));
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string_view host = authority;
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) throw url_error("unterminated ipv6 literal in '" + std::string(url) + "'");
    host = authority.substr(1, close - 1);
    if (close + 1 < authority.size() && authority[close + 1] == ':') parts.port = authority.substr(close + 2);
  } else if (auto p = authority.rfind(':'); p != std::string_view::npos) {
    host = authority.substr(0, p);
    parts.port = authority.substr(p + 1);
  }
  parts.host = normalize_host(host);
  if (parts.host.empty()) throw url_error("no host in '" + std::string(url) + "'");
  return parts;
}

inline std::string url_host(std::string_view url) { return parse_url(url).host; }

/// Public suffix list with the standard rule algorithm: the longest
/// matching rule wins, exception rules ("!") beat wildcards ("*."), and
/// an unlisted TLD is its own public suffix.
class public_suffix_list {
public:
  public_suffix_list() = default;

  /// Parses the publicsuffix.org text format.  The PRIVATE section is
  /// skipped unless include_private is set.
  static public_suffix_list parse(std::istream& in, bool include_private = false) {
    public_suffix_list psl;
    std::string line;
    bool in_private = false;
    while (std::getline(in, line)) {
      if (line.find("===BEGIN PRIVATE DOMAINS===") != std::string::npos) in_private = true;
      if (line.find("===END PRIVATE DOMAINS===") != std::string::npos) in_private = false;
      if (line.rfind("//", 0) == 0) continue;
      auto end = line.find_first_of(" \t\r");
      std::string rule = normalize_host(line.substr(0, end));
      if (rule.empty() || (in_private && !include_private)) continue;
      if (rule.front() == '!') {
        psl.exceptions_.insert(rule.substr(1));
      } else if (rule.rfind("*.", 0) == 0) {
        psl.wildcards_.insert(rule.substr(2));
      } else {
        psl.rules_.insert(rule);
      }
    }
    return psl;
  }

  static public_suffix_list load(const std::string& path, bool include_private = false) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open public suffix list " + path);
    return parse(in, include_private);
  }

  static public_suffix_list from_string(const std::string& text, bool include_private = false) {
    std::istringstream in(text);
    return parse(in, include_private);
  }

  std::size_t size() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

  /// number of trailing labels forming the public suffix of host
  std::size_t suffix_label_count(const std::vector<std::string>& labels) const {
    std::size_t best = 1;
    const std::size_t n = labels.size();
    std::string candidate;
    for (std::size_t k = 1; k <= n; ++k) {
      candidate = k == 1 ? labels[n - 1] : labels[n - k] + "." + candidate;
      if (exceptions_.count(candidate)) return std::max<std::size_t>(k - 1, 1);
      if (rules_.count(candidate)) best = std::max(best, k);
      // "*.parent" matches any single label under parent
      if (k >= 2) {
        std::string parent = candidate.substr(candidate.find('.') + 1);
        if (wildcards_.count(parent)) best = std::max(best, k);
      }
    }
    return best;
  }

  std::string public_suffix(std::string_view host) const {
    auto labels = split_labels(host);
    auto k = suffix_label_count(labels);
    return join_tail(labels, k);
  }

  /// eTLD+1 of host; the host itself for ip literals, bare public
  /// suffixes, and single-label names.
  std::string registrable_domain(std::string_view raw_host) const {
    std::string host = normalize_host(raw_host);
    if (host.empty()) throw url_error("empty host");
    if (is_ip_literal(host)) return host;
    auto labels = split_labels(host);
    if (std::any_of(labels.begin(), labels.end(), [](const std::string& l) { return l.empty(); }))
      throw url_error("empty label in host '" + host + "'");
    auto k = suffix_label_count(labels);
    if (k >= labels.size()) return host;
    return join_tail(labels, k + 1);
  }

private:
  static std::string join_tail(const std::vector<std::string>& labels, std::size_t k) {
    std::string out;
    for (std::size_t i = labels.size() - std::min(k, labels.size()); i < labels.size(); ++i) {
      if (!out.empty()) out += '.';
      out += labels[i];
    }
    return out;
  }

  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;
  std::unordered_set<std::string> exceptions_;
};


enum class party { first_domain, first_subdomain, third };

inline const char* to_string(party p) {
  switch (p) {
    case party::first_domain: return "first_domain";
    case party::first_subdomain: return "first_subdomain";
    case party::third: return "third";
  }
  return "third";
}

/// Relation of a request host to the visited site.  Both names are
/// reduced to their registrable domain before comparison.
inline party classify_party(std::string_view request_host, std::string_view site_domain,
                            const public_suffix_list& psl) {
  std::string host = normalize_host(request_host);
  std::string site_reg = psl.registrable_domain(site_domain);
  if (host == site_reg) return party::first_domain;
  if (psl.registrable_domain(host) == site_reg) return party::first_subdomain;
  return party::third;
}

}  // namespace cnamecloak
