// features.hpp
//
// Site-level and request-level features, the raw feature table that
// stages exchange as CSV, and the one-hot encoder that turns a table
// into an encoded_matrix.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "cnamecloak/csv.hpp"
#include "cnamecloak/domain.hpp"
#include "cnamecloak/filterlist.hpp"
#include "cnamecloak/ingest.hpp"
#include "cnamecloak/labeler.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak {

/// Shannon entropy (bits) of the character distribution of s divided by
/// the length of s.
inline double metric_entropy(std::string_view s) {
  if (s.empty()) throw empty_input("metric entropy of empty string");
  std::size_t counts[256] = {};
  for (unsigned char c : s) ++counts[c];
  const double n = static_cast<double>(s.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h / n;
}

/// Labels to the left of the registrable domain.
struct subdomain_prefix_parts {
  std::string joined;  // labels concatenated without dots
  std::vector<std::string> labels;
};

inline subdomain_prefix_parts subdomain_prefix(std::string_view raw_host, const public_suffix_list& psl) {
  std::string host = normalize_host(raw_host);
  std::string reg = psl.registrable_domain(host);
  subdomain_prefix_parts out;
  if (host == reg) return out;
  std::string_view left = std::string_view(host).substr(0, host.size() - reg.size() - 1);
  out.labels = split_labels(left);
  for (const auto& l : out.labels) out.joined += l;
  return out;
}

/// English word list, one lowercase word per line.
class dictionary {
public:
  dictionary() = default;
  explicit dictionary(std::vector<std::string> words) {
    for (auto& w : words) words_.insert(normalize_host(w));
  }

  static dictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dictionary " + path);
    dictionary d;
    std::string w;
    while (std::getline(in, w)) {
      w = normalize_host(w);
      if (!w.empty()) d.words_.insert(std::move(w));
    }
    return d;
  }

  bool contains(std::string_view word) const { return words_.count(normalize_host(word)) > 0; }
  std::size_t size() const { return words_.size(); }

private:
  std::unordered_set<std::string> words_;
};

struct site_features {
  double num_url = 0, num_1st = 0, num_3rd = 0, num_script = 0;
  double pct_script_call = 0, pct_xhr = 0, pct_3rd_window = 0;
  double ranking = 0;
  std::string country, category;
};

struct request_features {
  std::string method;
  bool is_xhr = false;
  std::string content_type;
  double len_url = 0, len_sub = 0, len_prefix_sub = 0, num_prefix_sub = 0;
  bool prefix_sub_blacklist = false, is_sub_dic = false;
  double entropy_url = 0, entropy_sub = 0, entropy_prefix_sub = 0;
};

inline site_features compute_site_features(const site_record& site, const public_suffix_list& psl) {
  if (site.requests.empty()) throw empty_site(site.site_id);
  site_features f;
  double xhr = 0, third_window = 0;
  for (const auto& r : site.requests) {
    f.num_url += 1;
    if (classify_party(url_host(r.url), site.domain, psl) == party::third)
      f.num_3rd += 1;
    else
      f.num_1st += 1;
    if (r.content_type == "script") f.num_script += 1;
    xhr += r.is_xhr;
    third_window += r.is_third_party_window;
  }
  f.pct_script_call = std::clamp(static_cast<double>(site.script_call_count) / f.num_url, 0.0, 1.0);
  f.pct_xhr = xhr / f.num_url;
  f.pct_3rd_window = third_window / f.num_url;
  f.ranking = static_cast<double>(site.ranking);
  f.country = site.country;
  f.category = site.category;
  return f;
}

inline request_features compute_request_features(const request_record& req, const dictionary& dict,
                                                 std::span<const filter_list> lists, const public_suffix_list& psl) {
  request_features f;
  const std::string host = url_host(req.url);
  auto prefix = subdomain_prefix(host, psl);
  f.method = req.method;
  f.is_xhr = req.is_xhr;
  f.content_type = req.content_type;
  f.len_url = static_cast<double>(req.url.size());
  f.len_sub = static_cast<double>(host.size());
  f.len_prefix_sub = static_cast<double>(prefix.joined.size());
  f.num_prefix_sub = static_cast<double>(prefix.labels.size());
  if (!prefix.labels.empty()) {
    const auto& leftmost = prefix.labels.front();
    f.prefix_sub_blacklist = std::any_of(lists.begin(), lists.end(),
                                         [&](const filter_list& l) { return l.prefix_in_blacklist(leftmost); });
    f.is_sub_dic = dict.contains(leftmost);
  }
  f.entropy_url = metric_entropy(req.url);
  f.entropy_sub = metric_entropy(host);
  f.entropy_prefix_sub = prefix.joined.empty() ? 0.0 : metric_entropy(prefix.joined);
  return f;
}

// ---------------------------------------------------------------------------
// raw feature tables

enum class feature_type { numeric, boolean, categorical };

inline const char* to_string(feature_type t) {
  switch (t) {
    case feature_type::numeric: return "numeric";
    case feature_type::boolean: return "boolean";
    case feature_type::categorical: return "categorical";
  }
  return "numeric";
}

struct feature_column {
  std::string name;
  feature_type type = feature_type::numeric;
  std::vector<double> numbers;           // numeric and boolean columns
  std::vector<std::string> categories;  // categorical columns
};

enum class instance_kind { site, request };

inline const char* to_string(instance_kind k) { return k == instance_kind::site ? "site" : "request"; }

inline instance_kind instance_kind_from_string(std::string_view s) {
  if (s == "site") return instance_kind::site;
  if (s == "request") return instance_kind::request;
  throw config_error("target must be 'site' or 'request', got '" + std::string(s) + "'");
}

/// One row per instance.  Metadata columns (id, site_id, url, label)
/// come first in the CSV, feature columns after.
struct feature_table {
  instance_kind kind = instance_kind::site;
  std::vector<std::string> ids;
  std::vector<std::string> site_ids;
  std::vector<std::string> urls;  // empty strings for site tables
  std::vector<int> labels;
  std::vector<feature_column> columns;

  std::size_t size() const { return ids.size(); }
  const feature_column& column(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw schema_mismatch("no column " + std::string(name));
  }

  feature_table subset(std::span<const std::size_t> idx) const {
    feature_table t;
    t.kind = kind;
    for (const auto& c : columns) t.columns.push_back({c.name, c.type, {}, {}});
    for (auto i : idx) {
      t.ids.push_back(ids[i]);
      t.site_ids.push_back(site_ids[i]);
      t.urls.push_back(urls[i]);
      t.labels.push_back(labels[i]);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].type == feature_type::categorical)
          t.columns[c].categories.push_back(columns[c].categories[i]);
        else
          t.columns[c].numbers.push_back(columns[c].numbers[i]);
      }
    }
    return t;
  }
};

inline std::vector<std::pair<std::string, feature_type>> site_feature_specs() {
  using ft = feature_type;
  return {{"num_url", ft::numeric},         {"num_1st", ft::numeric},        {"num_3rd", ft::numeric},
          {"num_script", ft::numeric},      {"pct_script_call", ft::numeric}, {"pct_xhr", ft::numeric},
          {"pct_3rd_window", ft::numeric},  {"ranking", ft::numeric},        {"country", ft::categorical},
          {"category", ft::categorical}};
}

inline std::vector<std::pair<std::string, feature_type>> request_feature_specs() {
  using ft = feature_type;
  return {{"method", ft::categorical},     {"is_xhr", ft::boolean},          {"content_type", ft::categorical},
          {"len_url", ft::numeric},        {"len_sub", ft::numeric},         {"len_prefix_sub", ft::numeric},
          {"num_prefix_sub", ft::numeric}, {"prefix_sub_blacklist", ft::boolean}, {"is_sub_dic", ft::boolean},
          {"entropy_url", ft::numeric},    {"entropy_sub", ft::numeric},     {"entropy_prefix_sub", ft::numeric}};
}

inline std::vector<std::pair<std::string, feature_type>> feature_specs(instance_kind kind) {
  return kind == instance_kind::site ? site_feature_specs() : request_feature_specs();
}

namespace detail {

inline feature_table empty_table(instance_kind kind) {
  feature_table t;
  t.kind = kind;
  for (auto& [name, type] : feature_specs(kind)) t.columns.push_back({name, type, {}, {}});
  return t;
}

inline void push_numbers(feature_table& t, std::initializer_list<double> nums, std::initializer_list<std::string> cats) {
  auto n = nums.begin();
  auto c = cats.begin();
  for (auto& col : t.columns) {
    if (col.type == feature_type::categorical)
      col.categories.push_back(*c++);
    else
      col.numbers.push_back(*n++);
  }
}

}  // namespace detail

/// One row per site.
inline feature_table build_site_table(const std::vector<labeled_site>& sites, const public_suffix_list& psl) {
  auto t = detail::empty_table(instance_kind::site);
  for (const auto& ls : sites) {
    if (ls.site.requests.empty()) continue;
    auto f = compute_site_features(ls.site, psl);
    t.ids.push_back(ls.site.site_id);
    t.site_ids.push_back(ls.site.site_id);
    t.urls.emplace_back();
    t.labels.push_back(ls.label ? 1 : 0);
    detail::push_numbers(t,
                         {f.num_url, f.num_1st, f.num_3rd, f.num_script, f.pct_script_call, f.pct_xhr,
                          f.pct_3rd_window, f.ranking},
                         {f.country, f.category});
  }
  return t;
}

/// One row per first-party-subdomain request, the only requests that
/// can carry a positive label.  Row ids are "<site_id>/<index>".
inline feature_table build_request_table(const std::vector<labeled_site>& sites, const dictionary& dict,
                                         std::span<const filter_list> lists, const public_suffix_list& psl) {
  auto t = detail::empty_table(instance_kind::request);
  for (const auto& ls : sites) {
    for (std::size_t i = 0; i < ls.requests.size(); ++i) {
      const auto& lr = ls.requests[i];
      if (lr.relation != party::first_subdomain) continue;
      auto f = compute_request_features(lr.request, dict, lists, psl);
      t.ids.push_back(ls.site.site_id + "/" + std::to_string(i));
      t.site_ids.push_back(ls.site.site_id);
      t.urls.push_back(lr.request.url);
      t.labels.push_back(lr.label ? 1 : 0);
      // column order: method, is_xhr, content_type, then numerics
      auto col = t.columns.begin();
      (col++)->categories.push_back(f.method);
      (col++)->numbers.push_back(f.is_xhr ? 1.0 : 0.0);
      (col++)->categories.push_back(f.content_type);
      for (double v : {f.len_url, f.len_sub, f.len_prefix_sub, f.num_prefix_sub, f.prefix_sub_blacklist ? 1.0 : 0.0,
                       f.is_sub_dic ? 1.0 : 0.0, f.entropy_url, f.entropy_sub, f.entropy_prefix_sub})
        (col++)->numbers.push_back(v);
    }
  }
  return t;
}

inline void write_table_csv(std::ostream& out, const feature_table& t) {
  std::vector<std::string> header{"id", "site_id", "url", "label"};
  for (const auto& c : t.columns) header.push_back(c.name);
  csv::write_row(out, header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < t.size(); ++i) {
    row = {t.ids[i], t.site_ids[i], t.urls[i], std::to_string(t.labels[i])};
    for (const auto& c : t.columns) {
      if (c.type == feature_type::categorical)
        row.push_back(c.categories[i]);
      else
        row.push_back(csv::format_number(c.numbers[i]));
    }
    csv::write_row(out, row);
  }
}

/// Reads a table written by write_table_csv; the header must list the
/// expected columns for kind, in order.
inline feature_table read_table_csv(std::istream& in, instance_kind kind) {
  auto t = detail::empty_table(kind);
  std::vector<std::string> fields;
  if (!csv::read_row(in, fields)) throw schema_error("empty feature csv");
  std::vector<std::string> expected{"id", "site_id", "url", "label"};
  for (const auto& c : t.columns) expected.push_back(c.name);
  if (fields != expected) throw schema_mismatch(std::string("feature csv header does not match ") + to_string(kind) + " columns");
  std::size_t line = 1;
  while (csv::read_row(in, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != expected.size()) throw schema_error("wrong field count", line);
    t.ids.push_back(fields[0]);
    t.site_ids.push_back(fields[1]);
    t.urls.push_back(fields[2]);
    if (fields[3] != "0" && fields[3] != "1") throw schema_error("label must be 0 or 1", line);
    t.labels.push_back(fields[3] == "1");
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& f = fields[4 + c];
      if (t.columns[c].type == feature_type::categorical) {
        t.columns[c].categories.push_back(f);
      } else {
        char* end = nullptr;
        double v = std::strtod(f.c_str(), &end);
        if (f.empty() || *end != '\0') throw schema_error("non-numeric value '" + f + "'", line);
        t.columns[c].numbers.push_back(v);
      }
    }
  }
  return t;
}

inline void save_table_csv(const std::string& path, const feature_table& t) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  write_table_csv(out, t);
}

inline feature_table load_table_csv(const std::string& path, instance_kind kind) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  return read_table_csv(in, kind);
}

// ---------------------------------------------------------------------------
// encoding

inline constexpr std::size_t default_vocabulary_size = 20;
inline constexpr const char* other_category = "other";

/// Column layout fixed from training rows: each categorical keeps its
/// most frequent values (ties by name) plus an "other" column.
struct encoding_schema {
  struct column {
    std::string name;
    feature_type type = feature_type::numeric;
    std::vector<std::string> vocabulary;  // categorical only
  };
  instance_kind kind = instance_kind::site;
  std::vector<column> columns;

  static encoding_schema fit(const feature_table& train, std::size_t vocabulary_size = default_vocabulary_size) {
    encoding_schema s;
    s.kind = train.kind;
    for (const auto& c : train.columns) {
      column col{c.name, c.type, {}};
      if (c.type == feature_type::categorical) {
        std::map<std::string, std::size_t> freq;
        for (const auto& v : c.categories) ++freq[v];
        std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t i = 0; i < ranked.size() && i < vocabulary_size; ++i) col.vocabulary.push_back(ranked[i].first);
      }
      s.columns.push_back(std::move(col));
    }
    return s;
  }

  std::vector<std::string> encoded_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns) {
      if (c.type != feature_type::categorical) {
        names.push_back(c.name);
        continue;
      }
      for (const auto& v : c.vocabulary) names.push_back(c.name + "=" + v);
      names.push_back(c.name + "=" + other_category);
    }
    return names;
  }

  std::string fingerprint() const { return encoded_matrix::fingerprint_of(encoded_names()); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["columns"] = nlohmann::json::array();
    for (const auto& c : columns)
      j["columns"].push_back({{"name", c.name}, {"type", to_string(c.type)}, {"vocabulary", c.vocabulary}});
    return j;
  }

  static encoding_schema from_json(const nlohmann::json& j) {
    encoding_schema s;
    s.kind = instance_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& c : j.at("columns")) {
      column col;
      col.name = c.at("name").get<std::string>();
      auto type = c.at("type").get<std::string>();
      col.type = type == "categorical" ? feature_type::categorical
                 : type == "boolean"   ? feature_type::boolean
                                       : feature_type::numeric;
      col.vocabulary = c.at("vocabulary").get<std::vector<std::string>>();
      s.columns.push_back(std::move(col));
    }
    return s;
  }
};

/// One-hot encodes table under schema.  Unseen categories go to the
/// "other" column.
inline encoded_matrix encode(const feature_table& table, const encoding_schema& schema) {
  if (table.columns.size() != schema.columns.size()) throw schema_mismatch("column count differs from schema");
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (table.columns[c].name != schema.columns[c].name || table.columns[c].type != schema.columns[c].type)
      throw schema_mismatch("column '" + table.columns[c].name + "' does not match schema column '" +
                            schema.columns[c].name + "'");
  }
  encoded_matrix m;
  m.rows = table.size();
  m.column_names = schema.encoded_names();
  m.cols = m.column_names.size();
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    m.group_names.push_back(schema.columns[c].name);
    const std::size_t width = schema.columns[c].type == feature_type::categorical ? schema.columns[c].vocabulary.size() + 1 : 1;
    m.column_group.insert(m.column_group.end(), width, c);
  }
  m.values.assign(m.rows * m.cols, 0.0);
  m.labels = table.labels;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& sc = schema.columns[c];
    const auto& tc = table.columns[c];
    if (sc.type != feature_type::categorical) {
      for (std::size_t r = 0; r < m.rows; ++r) m(r, offset) = tc.numbers[r];
      ++offset;
      continue;
    }
    std::map<std::string, std::size_t> slot;
    for (std::size_t v = 0; v < sc.vocabulary.size(); ++v) slot.emplace(sc.vocabulary[v], v);
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto it = slot.find(tc.categories[r]);
      m(r, offset + (it == slot.end() ? sc.vocabulary.size() : it->second)) = 1.0;
    }
    offset += sc.vocabulary.size() + 1;
  }
  return m;
}

inline void write_matrix_csv(std::ostream& out, const encoded_matrix& m) {
  auto header = m.column_names;
  header.push_back("label");
  csv::write_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < m.rows; ++r) {
    row.clear();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(csv::format_number(m(r, c)));
    row.push_back(std::to_string(m.labels[r]));
    csv::write_row(out, row);
  }
}

}  // namespace cnamecloak
