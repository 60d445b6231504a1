// pipeline.hpp
//
// The batch stages behind the command-line tool.  Stages talk to each
// other only through files in the output directory:
//
//   label      crawl + FDNS + lists -> labeled.jsonl, summary.{json,csv}
//   features   labeled.jsonl        -> site_features.csv, request_features.csv
//   train      <target>_features    -> <target>_split.json, <target>_cv.json,
//                                      <target>_grid.json, <target>_model.json
//   evaluate   model + features     -> <target>_metrics.{json,csv}
//   importance model + features     -> <target>_importance.{json,csv}
//   drift      labeled A + labeled B -> <target>_drift.json

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnamecloak/csv.hpp"
#include "cnamecloak/domain.hpp"
#include "cnamecloak/features.hpp"
#include "cnamecloak/filterlist.hpp"
#include "cnamecloak/ingest.hpp"
#include "cnamecloak/labeler.hpp"
#include "cnamecloak/learn/baseline.hpp"
#include "cnamecloak/learn/importance.hpp"
#include "cnamecloak/learn/model.hpp"
#include "cnamecloak/learn/validation.hpp"
#include "cnamecloak/resolver.hpp"

namespace cnamecloak {

#ifndef CNAMECLOAK_DATA_DIR
#define CNAMECLOAK_DATA_DIR "data"
#endif

enum class resolver_mode { offline, live };

struct pipeline_config {
  // inputs
  std::string crawl;
  std::string fdns;
  std::vector<std::string> filters;
  std::string dictionary = std::string(CNAMECLOAK_DATA_DIR) + "/dictionary/web2.txt";
  std::string psl = std::string(CNAMECLOAK_DATA_DIR) + "/psl/public_suffix_list.dat";
  std::string out = "out";
  // drift inputs: labeled JSONL of the training year and the test year
  std::string train_labeled;
  std::string test_labeled;

  resolver_mode resolver = resolver_mode::offline;
  std::string upstream = "127.0.0.1:53";

  std::uint64_t seed = 2;
  std::size_t folds = 10;
  double test_fraction = 0.2;
  std::size_t threads = 0;
  std::size_t n_repeats = 10;
  std::size_t vocabulary_size = default_vocabulary_size;

  bool tune = true;  // grid-search members; otherwise use the fixed member params
  // algorithms compared by cross-validation before tuning, per target
  std::map<instance_kind, std::vector<learn::algorithm>> compare;
  // "<target>.<algorithm>" -> grid text ("name=v1,v2;...")
  std::map<std::string, std::string> grids;
  // "<target>.<algorithm>" -> fixed params text, same syntax with single values
  std::map<std::string, std::string> member_params;
};

inline std::string member_key(instance_kind target, learn::algorithm a) {
  return std::string(to_string(target)) + "." + learn::to_string(a);
}

/// Soft-vote members per target.
inline std::vector<learn::algorithm> voting_members(instance_kind target) {
  using learn::algorithm;
  if (target == instance_kind::site)
    return {algorithm::random_forest, algorithm::extra_trees, algorithm::gradient_boosting};
  return {algorithm::random_forest, algorithm::extra_trees};
}

/// Best settings reported for the tuned members; used when tuning is off
/// and always present in the default grids.
inline std::string tuned_member_params(instance_kind target, learn::algorithm a) {
  using learn::algorithm;
  if (target == instance_kind::site) {
    switch (a) {
      case algorithm::random_forest: return "max_features=1;min_samples_split=8;min_samples_leaf=3;n_estimators=100";
      case algorithm::extra_trees: return "max_features=10;min_samples_split=2;min_samples_leaf=3;n_estimators=300";
      case algorithm::gradient_boosting:
        return "max_features=0.3;min_samples_leaf=100;n_estimators=300;learning_rate=0.2;max_depth=8";
      default: return {};
    }
  }
  switch (a) {
    case algorithm::random_forest: return "max_features=1;min_samples_split=2;min_samples_leaf=1;n_estimators=300";
    case algorithm::extra_trees: return "max_features=1;min_samples_split=2;min_samples_leaf=1;n_estimators=100";
    default: return {};
  }
}

/// Default search grids: the reported best values plus the library
/// defaults they were tuned from.
inline std::string default_grid(instance_kind target, learn::algorithm a) {
  using learn::algorithm;
  if (target == instance_kind::site) {
    switch (a) {
      case algorithm::random_forest:
        return "max_features=1,sqrt;min_samples_split=2,8;min_samples_leaf=1,3;n_estimators=100";
      case algorithm::extra_trees:
        return "max_features=sqrt,10;min_samples_split=2;min_samples_leaf=1,3;n_estimators=100,300";
      case algorithm::gradient_boosting:
        return "max_features=0.3;min_samples_leaf=1,100;n_estimators=100,300;learning_rate=0.1,0.2;max_depth=3,8";
      default: return {};
    }
  }
  switch (a) {
    case algorithm::random_forest:
      return "max_features=1,sqrt;min_samples_split=2;min_samples_leaf=1;n_estimators=100,300";
    case algorithm::extra_trees:
      return "max_features=1,sqrt;min_samples_split=2;min_samples_leaf=1;n_estimators=100";
    default: return {};
  }
}

inline std::vector<learn::algorithm> default_comparison(instance_kind target) {
  using learn::algorithm;
  std::vector<algorithm> all(std::begin(learn::implemented_algorithms), std::end(learn::implemented_algorithms));
  // brute-force KNN is quadratic in the number of rows; requests are too many
  if (target == instance_kind::request) std::erase(all, algorithm::knn);
  return all;
}

/// Parameters for a member: explicit config, else the tuned settings.
inline learn::hyper_params fixed_member_params(const pipeline_config& cfg, instance_kind target, learn::algorithm a) {
  auto base = learn::default_params(a, cfg.seed);
  auto it = cfg.member_params.find(member_key(target, a));
  auto text = it != cfg.member_params.end() ? it->second : tuned_member_params(target, a);
  auto grid = learn::param_grid::parse(text);
  auto points = grid.points(base);
  return points.empty() ? base : points.front();
}

inline learn::param_grid member_grid(const pipeline_config& cfg, instance_kind target, learn::algorithm a) {
  auto it = cfg.grids.find(member_key(target, a));
  return learn::param_grid::parse(it != cfg.grids.end() ? it->second : default_grid(target, a));
}

// ---------------------------------------------------------------------------
// file helpers

namespace detail {

inline std::filesystem::path out_path(const pipeline_config& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return std::filesystem::path(cfg.out) / name;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io_error("cannot write " + p.string());
  out << text;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(1) + "\n"); }

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw io_error("cannot open " + p.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw schema_error("invalid JSON in " + p.string());
  return j;
}

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw config_error(what + " path is not set");
  if (!std::filesystem::exists(path)) throw config_error(what + " not found: " + path);
}

inline nlohmann::json provenance(const pipeline_config& cfg) {
  return {{"seed", cfg.seed}, {"test_fraction", cfg.test_fraction}, {"folds", cfg.folds}};
}

}  // namespace detail

/// Shared resources loaded once per command.
struct pipeline_context {
  public_suffix_list psl;
  std::vector<filter_list> lists;
  dictionary words;

  static pipeline_context load(const pipeline_config& cfg, bool need_dictionary) {
    pipeline_context ctx;
    detail::require_file(cfg.psl, "public suffix list");
    ctx.psl = public_suffix_list::load(cfg.psl);
    for (const auto& f : cfg.filters) {
      detail::require_file(f, "filter list");
      ctx.lists.push_back(filter_list::load(f));
    }
    if (need_dictionary) {
      detail::require_file(cfg.dictionary, "dictionary");
      ctx.words = dictionary::load(cfg.dictionary);
    }
    return ctx;
  }
};

// ---------------------------------------------------------------------------
// summary / label

struct label_summary {
  dataset_summary_table table;
  label_stats stats;
  std::size_t malformed_lines = 0;

  nlohmann::json to_json() const {
    return {{"total_sites", table.total_sites},
            {"total_requests", table.total_requests},
            {"third_party_requests", table.third_party},
            {"first_party_domain_requests", table.first_domain},
            {"first_party_subdomain_requests", table.first_subdomain},
            {"positive_sites", stats.positive_sites},
            {"positive_requests", stats.positive_requests},
            {"resolved_names", stats.resolved_names},
            {"resolve_errors", stats.resolve_errors},
            {"malformed_lines", malformed_lines}};
  }
};

/// Table in the shape of the dataset summary: counts and share of total.
inline std::string format_summary(const dataset_summary_table& t) {
  auto pct = [&](std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", t.total_requests ? 100.0 * static_cast<double>(n) / static_cast<double>(t.total_requests) : 0.0);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "metric,count,share\n";
  os << "third_party_requests," << t.third_party << ',' << pct(t.third_party) << '\n';
  os << "first_party_domain_requests," << t.first_domain << ',' << pct(t.first_domain) << '\n';
  os << "first_party_subdomain_requests," << t.first_subdomain << ',' << pct(t.first_subdomain) << '\n';
  os << "total_requests," << t.total_requests << ",100.0%\n";
  os << "total_sites," << t.total_sites << ",\n";
  return os.str();
}

inline void write_summary(const pipeline_config& cfg, const label_summary& s) {
  auto j = s.to_json();
  j["provenance"] = detail::provenance(cfg);
  detail::write_json(detail::out_path(cfg, "summary.json"), j);
  detail::write_text(detail::out_path(cfg, "summary.csv"), format_summary(s.table));
}

inline label_summary cmd_summary(const pipeline_config& cfg) {
  detail::require_file(cfg.crawl, "crawl file");
  detail::require_file(cfg.psl, "public suffix list");
  auto psl = public_suffix_list::load(cfg.psl);
  load_report report;
  auto sites = load_crawl(cfg.crawl, &report);
  label_summary s;
  s.table = dataset_summary(sites, psl);
  s.malformed_lines = report.malformed_lines;
  write_summary(cfg, s);
  return s;
}

inline label_summary cmd_label(const pipeline_config& cfg) {
  detail::require_file(cfg.crawl, "crawl file");
  if (cfg.filters.empty()) throw config_error("at least one --filters list is required for labeling");
  std::unique_ptr<cname_resolver> resolver;
  fdns_index index;
  if (cfg.resolver == resolver_mode::offline) {
    detail::require_file(cfg.fdns, "fdns file (offline resolver)");
    index = load_fdns(cfg.fdns);
    resolver = std::make_unique<offline_resolver>(index);
  } else {
    resolver = std::make_unique<live_resolver>(dns::endpoint::parse(cfg.upstream));
  }
  auto ctx = pipeline_context::load(cfg, false);
  load_report report;
  auto sites = load_crawl(cfg.crawl, &report);
  label_summary s;
  s.table = dataset_summary(sites, ctx.psl);
  s.malformed_lines = report.malformed_lines;
  auto labeled = label_corpus(sites, *resolver, ctx.lists, ctx.psl, &s.stats);
  {
    std::ofstream out(detail::out_path(cfg, "labeled.jsonl"), std::ios::binary);
    if (!out) throw io_error("cannot write labeled.jsonl");
    write_labeled(out, labeled);
  }
  write_summary(cfg, s);
  return s;
}

// ---------------------------------------------------------------------------
// features

inline std::string labeled_input(const pipeline_config& cfg) {
  auto p = (std::filesystem::path(cfg.out) / "labeled.jsonl").string();
  detail::require_file(p, "labeled dataset");
  return p;
}

inline std::string features_path(const pipeline_config& cfg, instance_kind target) {
  return (std::filesystem::path(cfg.out) / (std::string(to_string(target)) + "_features.csv")).string();
}

inline feature_table build_table(const std::vector<labeled_site>& sites, instance_kind target, const pipeline_context& ctx) {
  return target == instance_kind::site ? build_site_table(sites, ctx.psl)
                                       : build_request_table(sites, ctx.words, ctx.lists, ctx.psl);
}

inline void cmd_features(const pipeline_config& cfg, std::vector<instance_kind> targets) {
  // prefix_sub_blacklist would silently be all-false without lists
  if (cfg.filters.empty() && std::find(targets.begin(), targets.end(), instance_kind::request) != targets.end())
    throw config_error("request features need at least one --filters list");
  auto ctx = pipeline_context::load(cfg, true);
  auto sites = load_labeled(labeled_input(cfg));
  for (auto target : targets) {
    detail::out_path(cfg, "");
    save_table_csv(features_path(cfg, target), build_table(sites, target, ctx));
  }
}

// ---------------------------------------------------------------------------
// train

/// Encoded train/test halves of one feature table.
struct prepared_split {
  learn::split_indices split;
  encoding_schema schema;
  encoded_matrix train;
  encoded_matrix test;
  feature_table test_rows;
};

inline prepared_split prepare(const feature_table& table, const pipeline_config& cfg) {
  prepared_split p;
  p.split = learn::train_test_split(table.labels, cfg.test_fraction, cfg.seed);
  auto train_rows = table.subset(p.split.train);
  p.test_rows = table.subset(p.split.test);
  p.schema = encoding_schema::fit(train_rows, cfg.vocabulary_size);
  p.train = encode(train_rows, p.schema);
  p.test = encode(p.test_rows, p.schema);
  return p;
}

struct train_report {
  std::vector<std::pair<learn::algorithm, learn::cv_result>> comparison;
  std::vector<std::pair<learn::algorithm, learn::grid_result>> grids;
  learn::voting_model vote;
  encoding_schema schema;
};

inline nlohmann::json model_document(const pipeline_config& cfg, instance_kind target, const encoding_schema& schema,
                                     const learn::voting_model& vote) {
  return {{"target", to_string(target)},
          {"provenance", detail::provenance(cfg)},
          {"schema", schema.to_json()},
          {"model", vote.to_json()}};
}

/// Trains the voting members on train with fixed or tuned parameters.
inline learn::voting_model fit_vote(const pipeline_config& cfg, instance_kind target, const encoded_matrix& train,
                                    std::vector<std::pair<learn::algorithm, learn::grid_result>>* grids = nullptr) {
  std::vector<learn::trained_model> members;
  for (auto a : voting_members(target)) {
    learn::hyper_params params;
    if (cfg.tune) {
      auto g = learn::grid_search(a, train, member_grid(cfg, target, a), learn::default_params(a, cfg.seed), cfg.folds,
                                  cfg.threads);
      params = g.best;
      if (grids) grids->emplace_back(a, std::move(g));
    } else {
      params = fixed_member_params(cfg, target, a);
    }
    members.push_back(learn::train(a, train, params, cfg.threads));
  }
  return learn::voting_model(std::move(members));
}

inline train_report cmd_train(const pipeline_config& cfg, instance_kind target) {
  auto fp = features_path(cfg, target);
  detail::require_file(fp, "feature table");
  auto table = load_table_csv(fp, target);
  auto prepared = prepare(table, cfg);

  nlohmann::json split_doc{{"target", to_string(target)}, {"provenance", detail::provenance(cfg)}};
  split_doc["train_ids"] = nlohmann::json::array();
  split_doc["test_ids"] = nlohmann::json::array();
  for (auto i : prepared.split.train) split_doc["train_ids"].push_back(table.ids[i]);
  for (auto i : prepared.split.test) split_doc["test_ids"].push_back(table.ids[i]);
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_split.json"), split_doc);

  train_report report;
  report.schema = prepared.schema;
  auto compare_it = cfg.compare.find(target);
  auto compare = compare_it != cfg.compare.end() ? compare_it->second : default_comparison(target);
  nlohmann::json cv_doc{{"target", to_string(target)}, {"provenance", detail::provenance(cfg)}};
  cv_doc["algorithms"] = nlohmann::json::array();
  std::ostringstream cv_csv;
  cv_csv << "algorithm,mean_f1,std_f1\n";
  for (auto a : compare) {
    auto r = learn::cross_validate(a, prepared.train, learn::default_params(a, cfg.seed), cfg.folds, cfg.threads);
    auto j = r.to_json();
    j["algorithm"] = learn::to_string(a);
    cv_doc["algorithms"].push_back(j);
    cv_csv << learn::to_string(a) << ',' << csv::format_number(r.mean) << ',' << csv::format_number(r.std) << '\n';
    report.comparison.emplace_back(a, std::move(r));
  }
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_cv.json"), cv_doc);
  detail::write_text(detail::out_path(cfg, std::string(to_string(target)) + "_cv.csv"), cv_csv.str());

  report.vote = fit_vote(cfg, target, prepared.train, &report.grids);
  nlohmann::json grid_doc{{"target", to_string(target)}, {"tuned", cfg.tune}, {"provenance", detail::provenance(cfg)}};
  grid_doc["members"] = nlohmann::json::array();
  for (const auto& m : report.vote.members()) {
    nlohmann::json entry{{"algorithm", learn::to_string(m.kind())}, {"params", m.params().to_json()}};
    for (const auto& [a, g] : report.grids) {
      if (a != m.kind()) continue;
      entry["best_mean_f1"] = g.best_mean;
      entry["grid"] = nlohmann::json::array();
      for (const auto& e : g.entries) entry["grid"].push_back({{"params", e.params.to_json()}, {"cv", e.score.to_json()}});
    }
    grid_doc["members"].push_back(entry);
  }
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_grid.json"), grid_doc);
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_model.json"),
                     model_document(cfg, target, report.schema, report.vote));
  return report;
}

// ---------------------------------------------------------------------------
// evaluate / importance

struct loaded_model {
  instance_kind target;
  encoding_schema schema;
  learn::voting_model vote;
};

inline loaded_model load_model(const pipeline_config& cfg, instance_kind target) {
  auto j = detail::read_json(std::filesystem::path(cfg.out) / (std::string(to_string(target)) + "_model.json"));
  loaded_model m;
  try {
    m.target = instance_kind_from_string(j.at("target").get<std::string>());
    m.schema = encoding_schema::from_json(j.at("schema"));
  } catch (const nlohmann::json::exception& e) {
    throw schema_mismatch(std::string("malformed model file: ") + e.what());
  }
  if (m.target != target) throw schema_mismatch("model was trained for a different target");
  m.vote = learn::voting_model::from_json(j.at("model"));
  if (m.schema.fingerprint() != m.vote.fingerprint()) throw schema_mismatch("model schema and members disagree");
  return m;
}

/// Test rows named by <target>_split.json.
inline feature_table load_test_rows(const pipeline_config& cfg, instance_kind target) {
  auto fp = features_path(cfg, target);
  detail::require_file(fp, "feature table");
  auto table = load_table_csv(fp, target);
  auto split = detail::read_json(std::filesystem::path(cfg.out) / (std::string(to_string(target)) + "_split.json"));
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < table.size(); ++i) row_of.emplace(table.ids[i], i);
  std::vector<std::size_t> idx;
  for (const auto& id : split.at("test_ids")) {
    auto it = row_of.find(id.get<std::string>());
    if (it == row_of.end()) throw schema_mismatch("test id " + id.get<std::string>() + " missing from feature table");
    idx.push_back(it->second);
  }
  return table.subset(idx);
}

struct evaluation_report {
  learn::metrics combined;
  std::vector<std::pair<std::string, learn::metrics>> members;
  std::vector<std::pair<std::string, learn::metrics>> baselines;
};

inline evaluation_report evaluate_model(const loaded_model& model, const feature_table& rows,
                                        std::span<const filter_list> lists) {
  auto m = encode(rows, model.schema);
  evaluation_report r;
  r.combined = learn::evaluate(model.vote, m);
  for (const auto& member : model.vote.members())
    r.members.emplace_back(learn::to_string(member.kind()), learn::evaluate(member, m));
  if (rows.kind == instance_kind::request)
    for (const auto& l : lists) r.baselines.emplace_back(l.source_name(), learn::baseline_filterlist(rows.urls, rows.labels, l));
  return r;
}

inline evaluation_report cmd_evaluate(const pipeline_config& cfg, instance_kind target) {
  auto model = load_model(cfg, target);
  auto rows = load_test_rows(cfg, target);
  std::vector<filter_list> lists;
  for (const auto& f : cfg.filters) {
    detail::require_file(f, "filter list");
    lists.push_back(filter_list::load(f));
  }
  auto r = evaluate_model(model, rows, lists);
  nlohmann::json j{{"target", to_string(target)}, {"provenance", detail::provenance(cfg)}, {"test_rows", rows.size()}};
  j["combined"] = r.combined.to_json();
  std::ostringstream csv_out;
  csv_out << "method,precision,recall,f1,tp,fp,tn,fn\n";
  auto row = [&](const std::string& name, const learn::metrics& mt) {
    csv_out << csv::quote(name) << ',' << csv::format_number(mt.precision) << ',' << csv::format_number(mt.recall) << ','
            << csv::format_number(mt.f1) << ',' << mt.tp << ',' << mt.fp << ',' << mt.tn << ',' << mt.fn << '\n';
  };
  row("combined", r.combined);
  for (const auto& [name, mt] : r.members) {
    j["members"][name] = mt.to_json();
    row(name, mt);
  }
  j["baselines"] = nlohmann::json::object();
  for (const auto& [name, mt] : r.baselines) {
    j["baselines"][name] = mt.to_json();
    row("filterlist:" + name, mt);
  }
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_metrics.json"), j);
  detail::write_text(detail::out_path(cfg, std::string(to_string(target)) + "_metrics.csv"), csv_out.str());
  return r;
}

inline std::vector<learn::feature_importance> cmd_importance(const pipeline_config& cfg, instance_kind target) {
  auto model = load_model(cfg, target);
  auto rows = load_test_rows(cfg, target);
  auto m = encode(rows, model.schema);
  auto result = learn::permutation_importance(model.vote, m, cfg.n_repeats, cfg.seed);
  nlohmann::json j{{"target", to_string(target)}, {"provenance", detail::provenance(cfg)}, {"n_repeats", cfg.n_repeats}};
  j["features"] = nlohmann::json::array();
  std::ostringstream csv_out;
  csv_out << "feature,median_drop,mean_drop,std_drop";
  for (std::size_t r = 0; r < cfg.n_repeats; ++r) csv_out << ",repeat_" << r;
  csv_out << '\n';
  for (const auto& fi : result) {
    j["features"].push_back(fi.to_json());
    csv_out << fi.feature << ',' << csv::format_number(fi.median) << ',' << csv::format_number(fi.mean) << ','
            << csv::format_number(fi.std);
    for (double d : fi.drops) csv_out << ',' << csv::format_number(d);
    csv_out << '\n';
  }
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_importance.json"), j);
  detail::write_text(detail::out_path(cfg, std::string(to_string(target)) + "_importance.csv"), csv_out.str());
  return result;
}

// ---------------------------------------------------------------------------
// drift

struct drift_report {
  learn::metrics same_year;   // trained on A, tested on A's held-out split
  learn::metrics cross_year;  // same model, tested on B's held-out split
  double delta_f1 = 0;        // same_year.f1 - cross_year.f1
};

/// Trains on dataset A and scores it on both held-out splits.  The
/// encoding schema comes from A's training rows only.
inline drift_report run_drift(const pipeline_config& cfg, instance_kind target, const feature_table& year_a,
                              const feature_table& year_b) {
  auto a = prepare(year_a, cfg);
  auto b_split = learn::train_test_split(year_b.labels, cfg.test_fraction, cfg.seed);
  auto b_test = encode(year_b.subset(b_split.test), a.schema);
  auto vote = fit_vote(cfg, target, a.train);
  drift_report r;
  r.same_year = learn::evaluate(vote, a.test);
  r.cross_year = learn::evaluate(vote, b_test);
  r.delta_f1 = r.same_year.f1 - r.cross_year.f1;
  return r;
}

inline drift_report cmd_drift(const pipeline_config& cfg, instance_kind target) {
  detail::require_file(cfg.train_labeled, "training-year labeled dataset");
  detail::require_file(cfg.test_labeled, "test-year labeled dataset");
  if (target == instance_kind::request && cfg.filters.empty())
    throw config_error("request features need at least one --filters list");
  auto ctx = pipeline_context::load(cfg, target == instance_kind::request);
  auto year_a = build_table(load_labeled(cfg.train_labeled), target, ctx);
  auto year_b = build_table(load_labeled(cfg.test_labeled), target, ctx);
  auto r = run_drift(cfg, target, year_a, year_b);
  nlohmann::json j{{"target", to_string(target)},
                   {"provenance", detail::provenance(cfg)},
                   {"same_year", r.same_year.to_json()},
                   {"cross_year", r.cross_year.to_json()},
                   {"delta_f1", r.delta_f1}};
  detail::write_json(detail::out_path(cfg, std::string(to_string(target)) + "_drift.json"), j);
  return r;
}

}  // namespace cnamecloak
