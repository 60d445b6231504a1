// ingest.hpp
//
// Canonical data model for crawled sites and requests, the crawl JSONL
// reader/writer, the offline forward-DNS (FDNS) index, and the
// per-party dataset summary.

#pragma once

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "cnamecloak/domain.hpp"
#include "cnamecloak/error.hpp"

namespace cnamecloak {

inline constexpr const char* unknown_token = "UNK";
inline constexpr std::size_t max_cname_hops = 8;

struct request_record {
  std::string site_id;
  std::string url;
  std::string method;
  std::string content_type;
  bool is_xhr = false;
  bool is_third_party_window = false;
  double timestamp = 0.0;

  bool operator==(const request_record&) const = default;
};

struct site_record {
  std::string site_id;
  std::string domain;
  std::int64_t ranking = 0;  // 0 = unknown
  std::string country = unknown_token;
  std::string category = unknown_token;
  std::int64_t script_call_count = 0;
  std::vector<request_record> requests;

  bool operator==(const site_record&) const = default;
};

/// What the loader saw besides the records themselves.
struct load_report {
  std::size_t lines = 0;
  std::size_t malformed_lines = 0;  // not valid JSON; skipped
  std::vector<std::size_t> malformed_line_numbers;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw schema_error(std::string("missing mandatory field '") + key + "'", line);
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw schema_error(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

inline bool require_bool(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_boolean()) throw schema_error(std::string("field '") + key + "' must be a boolean", line);
  return v.get<bool>();
}

inline std::int64_t optional_int(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return 0;
  if (!it->is_number_integer()) throw schema_error(std::string("field '") + key + "' must be an integer", line);
  return it->get<std::int64_t>();
}

inline std::string optional_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) return unknown_token;
  return it->get<std::string>();
}

}  // namespace detail

/// Builds a request_record from one parsed crawl line, validating the
/// wire schema.  Used by both the plain and the labeled readers.
inline request_record request_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw schema_error("line is not a JSON object", line);
  request_record r;
  r.site_id = detail::require_string(j, "site_id", line);
  r.url = detail::require_string(j, "url", line);
  r.method = detail::require_string(j, "method", line);
  r.content_type = detail::require_string(j, "content_type", line);
  r.is_xhr = detail::require_bool(j, "is_xhr", line);
  r.is_third_party_window = detail::require_bool(j, "is_third_party_window", line);
  if (auto it = j.find("timestamp"); it != j.end() && it->is_number()) r.timestamp = it->get<double>();
  if (r.method.empty()) throw schema_error("empty method", line);
  for (auto& c : r.method) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  try {
    parse_url(r.url);
  } catch (const url_error& e) {
    throw schema_error(e.what(), line);
  }
  return r;
}

/// Incrementally groups request lines into sites, keeping first-seen
/// order.  Site metadata is taken from the first line that carries it.
class site_builder {
public:
  site_record& add(const nlohmann::json& j, request_record r, std::size_t line) {
    auto domain = normalize_host(detail::require_string(j, "site_domain", line));
    auto [it, inserted] = index_.try_emplace(r.site_id, sites_.size());
    if (inserted) {
      site_record s;
      s.site_id = r.site_id;
      s.domain = domain;
      sites_.push_back(std::move(s));
    }
    site_record& site = sites_[it->second];
    if (auto meta = j.find("site_meta"); meta != j.end() && meta->is_object() && !has_meta_.count(site.site_id)) {
      has_meta_.insert(site.site_id);
      site.ranking = detail::optional_int(*meta, "ranking", line);
      site.country = detail::optional_string(*meta, "country");
      site.category = detail::optional_string(*meta, "category");
      site.script_call_count = detail::optional_int(*meta, "script_call_count", line);
      if (site.ranking < 0) throw schema_error("ranking must be >= 0", line);
      if (site.script_call_count < 0) throw schema_error("script_call_count must be >= 0", line);
    }
    site.requests.push_back(std::move(r));
    return site;
  }

  std::vector<site_record> take() { return std::move(sites_); }

private:
  std::vector<site_record> sites_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_set<std::string> has_meta_;
};

/// Reads crawl JSONL from a stream.  Lines that are not JSON are counted
/// and skipped; lines that are JSON but violate the schema throw.
inline std::vector<site_record> read_crawl(std::istream& in, load_report* report = nullptr) {
  site_builder builder;
  load_report local;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.lines;
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      ++local.malformed_lines;
      local.malformed_line_numbers.push_back(line);
      continue;
    }
    builder.add(j, request_from_json(j, line), line);
  }
  if (local.malformed_lines > 0)
    std::clog << "warning: skipped " << local.malformed_lines << " malformed crawl line(s)\n";
  if (report) *report = local;
  return builder.take();
}

inline std::vector<site_record> load_crawl(const std::string& path, load_report* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open crawl file " + path);
  return read_crawl(in, report);
}

inline nlohmann::json request_to_json(const site_record& site, const request_record& r, bool with_meta) {
  nlohmann::json j;
  j["site_id"] = r.site_id;
  j["site_domain"] = site.domain;
  j["url"] = r.url;
  j["method"] = r.method;
  j["content_type"] = r.content_type;
  j["is_xhr"] = r.is_xhr;
  j["is_third_party_window"] = r.is_third_party_window;
  j["timestamp"] = r.timestamp;
  if (with_meta) {
    j["site_meta"] = {{"ranking", site.ranking},
                      {"country", site.country},
                      {"category", site.category},
                      {"script_call_count", site.script_call_count}};
  }
  return j;
}

/// Writes sites in the crawl JSONL wire format.  A site without
/// requests cannot be represented and is skipped.
inline void write_crawl(std::ostream& out, const std::vector<site_record>& sites) {
  for (const auto& site : sites) {
    bool first = true;
    for (const auto& r : site.requests) {
      out << request_to_json(site, r, first).dump() << '\n';
      first = false;
    }
  }
}

// ---------------------------------------------------------------------------
// FDNS

/// Ordered CNAME targets for one owner name.
struct cname_chain {
  std::string owner;
  std::vector<std::string> targets;
  bool truncated = false;  // hit max_cname_hops

  bool empty() const { return targets.empty(); }
  bool operator==(const cname_chain&) const = default;
};

/// Offline CNAME index.  Stores direct owner -> target edges and
/// follows them on lookup.
class fdns_index {
public:
  void add_cname(std::string_view owner, std::string_view target) {
    edges_.try_emplace(normalize_host(owner), normalize_host(target));
  }

  bool contains(std::string_view name) const { return edges_.count(normalize_host(name)) > 0; }
  std::size_t size() const { return edges_.size(); }

  /// Follows the chain from name.  Loops are cut before a name repeats
  /// and chains are capped at max_cname_hops.
  cname_chain chain(std::string_view name) const {
    cname_chain c;
    c.owner = normalize_host(name);
    std::unordered_set<std::string> seen{c.owner};
    std::string current = c.owner;
    while (true) {
      auto it = edges_.find(current);
      if (it == edges_.end()) break;
      if (seen.count(it->second)) break;
      if (c.targets.size() == max_cname_hops) {
        c.truncated = true;
        std::clog << "warning: cname chain for " << c.owner << " truncated at " << max_cname_hops << " hops\n";
        break;
      }
      c.targets.push_back(it->second);
      seen.insert(it->second);
      current = it->second;
    }
    return c;
  }

private:
  std::unordered_map<std::string, std::string> edges_;
};

/// Parses FDNS JSONL (Rapid7 name/type/value).  Non-cname records are
/// ignored.
inline fdns_index read_fdns(std::istream& in) {
  fdns_index index;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw schema_error("fdns line is not a JSON object", line);
    auto name = detail::require_string(j, "name", line);
    auto type = normalize_host(detail::require_string(j, "type", line));
    auto value = detail::require_string(j, "value", line);
    if (type == "cname") index.add_cname(name, value);
  }
  return index;
}

/// Loads plain or gzip-compressed FDNS JSONL; zlib reads both.
inline fdns_index load_fdns(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw io_error("cannot open fdns file " + path);
  std::string content;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) content.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = gzerror(f, &err);
  std::string message = msg ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw io_error("reading " + path + ": " + message);
  std::istringstream in(content);
  return read_fdns(in);
}

// ---------------------------------------------------------------------------
// summary

struct dataset_summary_table {
  std::size_t total_sites = 0;
  std::size_t total_requests = 0;
  std::size_t first_domain = 0;
  std::size_t first_subdomain = 0;
  std::size_t third_party = 0;
};

inline dataset_summary_table dataset_summary(const std::vector<site_record>& sites, const public_suffix_list& psl) {
  dataset_summary_table t;
  t.total_sites = sites.size();
  for (const auto& site : sites) {
    for (const auto& r : site.requests) {
      ++t.total_requests;
      switch (classify_party(url_host(r.url), site.domain, psl)) {
        case party::first_domain: ++t.first_domain; break;
        case party::first_subdomain: ++t.first_subdomain; break;
        case party::third: ++t.third_party; break;
      }
    }
  }
  return t;
}

}  // namespace cnamecloak
