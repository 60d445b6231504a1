// labeler.hpp
//
// Ground-truth labels.  A request is a cloaked tracker when its host is
// a first-party subdomain of the visited site and some CNAME target of
// that host matches a tracker rule.  A site is positive when any of its
// requests is.

#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnamecloak/domain.hpp"
#include "cnamecloak/filterlist.hpp"
#include "cnamecloak/ingest.hpp"
#include "cnamecloak/resolver.hpp"

namespace cnamecloak {

struct labeled_request {
  request_record request;
  party relation = party::third;
  bool label = false;
  std::optional<std::string> matched_rule;
  std::optional<cname_chain> chain;
  bool resolve_failed = false;
};

/// A site together with its labeled requests; request order follows the
/// crawl.
struct labeled_site {
  site_record site;  // requests mirrored here for feature extraction
  std::vector<labeled_request> requests;
  bool label = false;
};

struct label_stats {
  std::size_t positive_requests = 0;
  std::size_t positive_sites = 0;
  std::size_t resolved_names = 0;
  std::size_t resolve_errors = 0;
};

/// Labels one request given the chain resolved for its host.
inline labeled_request label_request(const request_record& req, std::string_view site_domain, const cname_chain& chain,
                                     std::span<const filter_list> lists, const public_suffix_list& psl) {
  labeled_request out;
  out.request = req;
  out.relation = classify_party(url_host(req.url), site_domain, psl);
  if (out.relation != party::first_subdomain) return out;
  if (!chain.empty()) out.chain = chain;
  for (const auto& target : chain.targets) {
    if (auto m = match_any(lists, target)) {
      out.label = true;
      out.matched_rule = m.rule->raw;
      break;
    }
  }
  return out;
}

inline labeled_request label_request(const request_record& req, std::string_view site_domain, const cname_chain& chain,
                                     const filter_list& list, const public_suffix_list& psl) {
  return label_request(req, site_domain, chain, std::span<const filter_list>(&list, 1), psl);
}

inline bool label_site(const std::vector<labeled_request>& labeled) {
  for (const auto& r : labeled)
    if (r.label) return true;
  return false;
}

inline bool label_site(const site_record&, const std::vector<labeled_request>& labeled) { return label_site(labeled); }

/// Labels a whole crawl.  Each distinct first-party subdomain is
/// resolved once; names that fail to resolve label their requests
/// negative and are counted in stats.
inline std::vector<labeled_site> label_corpus(const std::vector<site_record>& sites, const cname_resolver& resolver,
                                              std::span<const filter_list> lists, const public_suffix_list& psl,
                                              label_stats* stats = nullptr) {
  label_stats local;
  std::map<std::string, std::optional<cname_chain>> cache;  // nullopt = resolve error
  std::vector<labeled_site> out;
  out.reserve(sites.size());
  for (const auto& site : sites) {
    labeled_site ls;
    ls.site = site;
    ls.requests.reserve(site.requests.size());
    for (const auto& req : site.requests) {
      const std::string host = url_host(req.url);
      if (classify_party(host, site.domain, psl) != party::first_subdomain) {
        ls.requests.push_back(label_request(req, site.domain, cname_chain{host, {}}, lists, psl));
        continue;
      }
      auto it = cache.find(host);
      if (it == cache.end()) {
        std::optional<cname_chain> chain;
        try {
          chain = resolver.resolve(host);
          ++local.resolved_names;
        } catch (const resolve_error& e) {
          ++local.resolve_errors;
          std::clog << "warning: " << e.what() << '\n';
        }
        it = cache.emplace(host, std::move(chain)).first;
      }
      if (it->second) {
        ls.requests.push_back(label_request(req, site.domain, *it->second, lists, psl));
      } else {
        auto lr = label_request(req, site.domain, cname_chain{host, {}}, lists, psl);
        lr.resolve_failed = true;
        ls.requests.push_back(std::move(lr));
      }
    }
    ls.label = label_site(ls.requests);
    for (const auto& r : ls.requests) local.positive_requests += r.label;
    local.positive_sites += ls.label;
    out.push_back(std::move(ls));
  }
  if (stats) *stats = local;
  return out;
}

// ---------------------------------------------------------------------------
// labeled JSONL: the crawl wire format plus label fields

inline void write_labeled(std::ostream& out, const std::vector<labeled_site>& sites) {
  for (const auto& ls : sites) {
    bool first = true;
    for (const auto& lr : ls.requests) {
      auto j = request_to_json(ls.site, lr.request, first);
      first = false;
      j["party"] = to_string(lr.relation);
      j["label"] = lr.label;
      j["matched_rule"] = lr.matched_rule ? nlohmann::json(*lr.matched_rule) : nlohmann::json(nullptr);
      j["cname"] = lr.chain ? nlohmann::json(lr.chain->targets) : nlohmann::json::array();
      j["resolve_error"] = lr.resolve_failed;
      out << j.dump() << '\n';
    }
  }
}

inline party party_from_string(const std::string& s, std::size_t line) {
  if (s == "first_domain") return party::first_domain;
  if (s == "first_subdomain") return party::first_subdomain;
  if (s == "third") return party::third;
  throw schema_error("unknown party '" + s + "'", line);
}

inline std::vector<labeled_site> read_labeled(std::istream& in) {
  site_builder builder;
  std::vector<std::vector<labeled_request>> per_site;
  std::map<std::string, std::size_t> slot;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw schema_error("labeled line is not JSON", line);
    labeled_request lr;
    lr.request = request_from_json(j, line);
    auto site_id = lr.request.site_id;
    builder.add(j, lr.request, line);
    const auto& label = detail::require(j, "label", line);
    if (!label.is_boolean()) throw schema_error("field 'label' must be a boolean", line);
    lr.label = label.get<bool>();
    lr.relation = party_from_string(detail::require_string(j, "party", line), line);
    if (auto m = j.find("matched_rule"); m != j.end() && m->is_string()) lr.matched_rule = m->get<std::string>();
    if (auto c = j.find("cname"); c != j.end() && c->is_array() && !c->empty()) {
      cname_chain chain;
      chain.owner = url_host(lr.request.url);
      for (const auto& t : *c) chain.targets.push_back(t.get<std::string>());
      lr.chain = std::move(chain);
    }
    if (auto e = j.find("resolve_error"); e != j.end() && e->is_boolean()) lr.resolve_failed = e->get<bool>();
    if (lr.label && (!lr.matched_rule || !lr.chain))
      throw schema_error("positive label without matched_rule and cname", line);
    auto [it, inserted] = slot.try_emplace(site_id, per_site.size());
    if (inserted) per_site.emplace_back();
    per_site[it->second].push_back(std::move(lr));
  }
  auto sites = builder.take();
  std::vector<labeled_site> out(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    out[i].site = std::move(sites[i]);
    out[i].requests = std::move(per_site[i]);
    out[i].label = label_site(out[i].requests);
  }
  return out;
}

inline std::vector<labeled_site> load_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open labeled file " + path);
  return read_labeled(in);
}

}  // namespace cnamecloak
