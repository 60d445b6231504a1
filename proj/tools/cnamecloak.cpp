// cnamecloak: command-line front end for the detection pipeline.
//
//   cnamecloak label      --crawl c.jsonl --fdns f.json.gz --filters easyprivacy.txt --out out/
//   cnamecloak features   --out out/
//   cnamecloak train      --target request --out out/
//   cnamecloak evaluate   --target request --filters easyprivacy.txt --out out/
//   cnamecloak importance --target site --out out/
//   cnamecloak drift      --train-labeled a/labeled.jsonl --test-labeled b/labeled.jsonl --out drift/
//   cnamecloak summary    --crawl c.jsonl --out out/
//
// Settings can also come from a JSON file given with --config; flags win.
// Exit status: 0 ok, 2 bad configuration, 3 bad input data, 4 model error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnamecloak/pipeline.hpp"

namespace {

using namespace cnamecloak;

int exit_code(error_family f) {
  switch (f) {
    case error_family::config: return 2;
    case error_family::data: return 3;
    case error_family::model: return 4;
  }
  return 1;
}

void apply_config_file(pipeline_config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  auto j = nlohmann::json::parse(in, nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) throw config_error("config file is not a JSON object: " + path);
  try {
    auto str = [&](const char* key, std::string& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    str("crawl", cfg.crawl);
    str("fdns", cfg.fdns);
    str("dictionary", cfg.dictionary);
    str("psl", cfg.psl);
    str("out", cfg.out);
    str("train_labeled", cfg.train_labeled);
    str("test_labeled", cfg.test_labeled);
    str("upstream", cfg.upstream);
    if (j.contains("filters")) cfg.filters = j.at("filters").get<std::vector<std::string>>();
    if (j.contains("resolver")) {
      auto r = j.at("resolver").get<std::string>();
      if (r != "offline" && r != "live") throw config_error("resolver must be offline or live");
      cfg.resolver = r == "live" ? resolver_mode::live : resolver_mode::offline;
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("folds")) cfg.folds = j.at("folds").get<std::size_t>();
    if (j.contains("test_fraction")) cfg.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();
    if (j.contains("n_repeats")) cfg.n_repeats = j.at("n_repeats").get<std::size_t>();
    if (j.contains("vocabulary_size")) cfg.vocabulary_size = j.at("vocabulary_size").get<std::size_t>();
    if (j.contains("tune")) cfg.tune = j.at("tune").get<bool>();
    if (j.contains("compare")) {
      for (const auto& [target, list] : j.at("compare").items()) {
        std::vector<learn::algorithm> algos;
        for (const auto& a : list) algos.push_back(learn::algorithm_from_string(a.get<std::string>()));
        cfg.compare[instance_kind_from_string(target)] = algos;
      }
    }
    if (j.contains("grids"))
      for (const auto& [key, text] : j.at("grids").items()) cfg.grids[key] = text.get<std::string>();
    if (j.contains("params"))
      for (const auto& [key, text] : j.at("params").items()) cfg.member_params[key] = text.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad config value: ") + e.what());
  }
}

nlohmann::json effective_config(const pipeline_config& cfg) {
  nlohmann::json j{{"crawl", cfg.crawl},
                   {"fdns", cfg.fdns},
                   {"filters", cfg.filters},
                   {"dictionary", cfg.dictionary},
                   {"psl", cfg.psl},
                   {"out", cfg.out},
                   {"train_labeled", cfg.train_labeled},
                   {"test_labeled", cfg.test_labeled},
                   {"resolver", cfg.resolver == resolver_mode::live ? "live" : "offline"},
                   {"upstream", cfg.upstream},
                   {"seed", cfg.seed},
                   {"folds", cfg.folds},
                   {"test_fraction", cfg.test_fraction},
                   {"threads", cfg.threads},
                   {"n_repeats", cfg.n_repeats},
                   {"vocabulary_size", cfg.vocabulary_size},
                   {"tune", cfg.tune}};
  j["compare"] = nlohmann::json::object();
  for (const auto& [target, algos] : cfg.compare) {
    auto& arr = j["compare"][to_string(target)] = nlohmann::json::array();
    for (auto a : algos) arr.push_back(learn::to_string(a));
  }
  j["grids"] = cfg.grids;
  j["params"] = cfg.member_params;
  return j;
}

void print_metrics(const char* name, const learn::metrics& m) {
  std::printf("%-28s precision %.4f  recall %.4f  f1 %.4f\n", name, m.precision, m.recall, m.f1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNAME-cloaking tracker detection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string crawl, fdns, out, resolver, upstream, dictionary, psl, train_labeled, test_labeled, target = "request";
  std::vector<std::string> filters;
  std::uint64_t seed = 0;
  std::size_t threads = 0, folds = 0;
  bool no_tune = false;

  app.add_option("--config", config_path, "JSON settings file");
  app.add_option("--crawl", crawl, "crawl JSONL");
  app.add_option("--fdns", fdns, "forward DNS dump (JSON lines, optionally gzipped)");
  app.add_option("--filters", filters, "Adblock-style filter list (repeatable)");
  app.add_option("--out", out, "output directory");
  app.add_option("--resolver", resolver, "offline or live")->check(CLI::IsMember({"offline", "live"}));
  app.add_option("--upstream", upstream, "DNS server for the live resolver, ip:port");
  app.add_option("--dictionary", dictionary, "word list, one word per line");
  app.add_option("--psl", psl, "public suffix list");
  app.add_option("--target", target, "site or request")->check(CLI::IsMember({"site", "request", "both"}));
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads (0: hardware)");
  app.add_option("--folds", folds, "cross-validation folds");
  app.add_flag("--no-tune", no_tune, "skip grid search and use fixed member parameters");

  auto* label_cmd = app.add_subcommand("label", "resolve CNAMEs and label requests and sites");
  auto* features_cmd = app.add_subcommand("features", "compute site and request feature tables");
  auto* train_cmd = app.add_subcommand("train", "compare, tune and fit the soft-voting model");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score the model and the filter-list baseline on the test split");
  auto* importance_cmd = app.add_subcommand("importance", "permutation importance on the test split");
  auto* drift_cmd = app.add_subcommand("drift", "train on one year, test on another");
  auto* summary_cmd = app.add_subcommand("summary", "request counts by party");
  drift_cmd->add_option("--train-labeled", train_labeled, "labeled JSONL of the training year");
  drift_cmd->add_option("--test-labeled", test_labeled, "labeled JSONL of the test year");

  CLI11_PARSE(app, argc, argv);

  try {
    pipeline_config cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (!crawl.empty()) cfg.crawl = crawl;
    if (!fdns.empty()) cfg.fdns = fdns;
    if (!filters.empty()) cfg.filters = filters;
    if (!out.empty()) cfg.out = out;
    if (!resolver.empty()) cfg.resolver = resolver == "live" ? resolver_mode::live : resolver_mode::offline;
    if (!upstream.empty()) cfg.upstream = upstream;
    if (!dictionary.empty()) cfg.dictionary = dictionary;
    if (!psl.empty()) cfg.psl = psl;
    if (!train_labeled.empty()) cfg.train_labeled = train_labeled;
    if (!test_labeled.empty()) cfg.test_labeled = test_labeled;
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--threads")) cfg.threads = threads;
    if (app.count("--folds")) cfg.folds = folds;
    if (no_tune) cfg.tune = false;

    std::vector<instance_kind> targets;
    if (target == "both") targets = {instance_kind::site, instance_kind::request};
    else targets = {instance_kind_from_string(target)};

    std::filesystem::create_directories(cfg.out);
    {
      std::ofstream echo(std::filesystem::path(cfg.out) / "config.json");
      echo << effective_config(cfg).dump(1) << '\n';
    }

    if (label_cmd->parsed()) {
      auto s = cmd_label(cfg);
      std::cout << format_summary(s.table);
      std::printf("positive requests %zu, positive sites %zu, resolve errors %zu, malformed lines %zu\n",
                  s.stats.positive_requests, s.stats.positive_sites, s.stats.resolve_errors, s.malformed_lines);
    } else if (summary_cmd->parsed()) {
      auto s = cmd_summary(cfg);
      std::cout << format_summary(s.table);
    } else if (features_cmd->parsed()) {
      if (target == "request" && !app.count("--target")) targets = {instance_kind::site, instance_kind::request};
      cmd_features(cfg, targets);
    } else if (train_cmd->parsed()) {
      for (auto t : targets) {
        auto r = cmd_train(cfg, t);
        std::printf("[%s] cross-validated F1 (default parameters)\n", to_string(t));
        for (const auto& [a, cv] : r.comparison)
          std::printf("  %-22s %.4f +- %.4f\n", learn::to_string(a), cv.mean, cv.std);
        for (const auto& m : r.vote.members())
          std::printf("  member %-15s %s\n", learn::to_string(m.kind()), m.params().to_json().dump().c_str());
      }
    } else if (evaluate_cmd->parsed()) {
      for (auto t : targets) {
        auto r = cmd_evaluate(cfg, t);
        std::printf("[%s]\n", to_string(t));
        print_metrics("combined", r.combined);
        for (const auto& [name, m] : r.members) print_metrics(name.c_str(), m);
        for (const auto& [name, m] : r.baselines) print_metrics(("filterlist:" + name).c_str(), m);
      }
    } else if (importance_cmd->parsed()) {
      for (auto t : targets) {
        auto r = cmd_importance(cfg, t);
        std::printf("[%s] median F1 drop\n", to_string(t));
        for (const auto& fi : r) std::printf("  %-22s %.4f\n", fi.feature.c_str(), fi.median);
      }
    } else if (drift_cmd->parsed()) {
      for (auto t : targets) {
        auto r = cmd_drift(cfg, t);
        std::printf("[%s]\n", to_string(t));
        print_metrics("same year", r.same_year);
        print_metrics("cross year", r.cross_year);
        std::printf("delta f1 %.4f\n", r.delta_f1);
      }
    }
  } catch (const cnamecloak::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.family());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
