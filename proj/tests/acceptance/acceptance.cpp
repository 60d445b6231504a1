// Acceptance checks.  Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
//
// The end-to-end criteria run on a real crawl when CNAMECLOAK_DATASET_DIR
// holds crawl.jsonl, fdns.json.gz, easyprivacy.txt and adguard.txt;
// otherwise on the 2,000-site synthetic corpus.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cnamecloak/pipeline.hpp"
#include "golden.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace cnamecloak;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void matcher_golden() {
  auto t0 = clock_type::now();
  std::size_t ok = 0, total = 0;
  bool scenario = false;
  for (const auto& c : golden::matcher_cases()) {
    auto list = parse_list(c.list, "golden");
    const bool got = match_domain(list, c.domain) != nullptr;
    ok += got == c.match;
    ++total;
    if (c.list == "||tracker.com^" && c.domain == "metric.tracker.com") scenario = got;
  }
  const double secs = seconds_since(t0);
  report(1, ok == total && total == 30 && scenario && secs < 1.0,
         std::to_string(ok) + "/" + std::to_string(total) + " golden cases" + fmt(" in %.3f s", secs));
}

void entropy_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> len(1, 200), ch(32, 126);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (int k = len(gen); k > 0; --k) s += static_cast<char>(ch(gen));
    worst = std::max(worst, std::abs(metric_entropy(s) - oracle::metric_entropy(s)));
  }
  const bool exact = metric_entropy("aaaa") == 0.0 && metric_entropy("ab") == 0.5;
  report(2, worst <= 1e-12 && exact, fmt("max deviation %.3g over 1000 strings", worst) + (exact ? ", aaaa=0 ab=0.5" : ", fixed values wrong"));
}

void cart_oracle() {
  auto t0 = clock_type::now();
  std::size_t mismatched = 0, nodes = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 gen(1000 + seed);
    std::uniform_int_distribution<int> v(0, 12), n_rows(20, 120);
    const std::size_t n = static_cast<std::size_t>(n_rows(gen));
    std::vector<std::vector<double>> x(n, std::vector<double>(2));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = {v(gen) * 0.5, static_cast<double>(v(gen))};
      y[i] = (x[i][0] + x[i][1] / 3 + std::uniform_real_distribution<double>(0, 3)(gen) > 5) ? 1 : 0;
    }
    auto m = encoded_matrix::from_rows(x, y, {"a", "b"});
    std::vector<double> yd(y.begin(), y.end()), w(n, 1.0);
    learn::tree_options opt;
    opt.max_depth = 2;
    auto rg = learn::make_rng(seed);
    auto t = learn::tree_builder(m, yd, w, opt).build(rg);
    std::vector<std::vector<std::size_t>> node_rows(t.size());
    std::vector<std::size_t> depth(t.size(), 0);
    node_rows[0].resize(n);
    std::iota(node_rows[0].begin(), node_rows[0].end(), 0);
    for (std::size_t node = 0; node < t.size(); ++node) {
      auto best = oracle::exhaustive_best(x, y, node_rows[node]);
      if (t.is_leaf(node)) {
        // a leaf above max depth must be one the oracle cannot improve
        if (depth[node] < 2 && best.found && oracle::fraction{0, 1} < best.decrease) ++mismatched;
        continue;
      }
      ++nodes;
      depth[static_cast<std::size_t>(t.left[node])] = depth[static_cast<std::size_t>(t.right[node])] = depth[node] + 1;
      const auto f = static_cast<std::size_t>(t.feature[node]);
      if (!best.found || !(oracle::gini_decrease(x, y, node_rows[node], f, t.threshold[node]) == best.decrease)) ++mismatched;
      for (auto r : node_rows[node])
        node_rows[static_cast<std::size_t>(x[r][f] <= t.threshold[node] ? t.left[node] : t.right[node])].push_back(r);
    }
  }
  const double secs = seconds_since(t0);
  report(3, mismatched == 0 && secs < 10.0,
         std::to_string(nodes) + " splits over 50 datasets, " + std::to_string(mismatched) + " differ from the exhaustive oracle" +
             fmt(", %.2f s", secs));
}

void fold_stratification() {
  std::mt19937_64 gen(77);
  std::size_t bad = 0, datasets = 0;
  while (datasets < 100) {
    const std::size_t n = 50 + gen() % 950;
    const double rate = 0.05 + static_cast<double>(gen() % 90) / 100.0;
    std::vector<int> y(n);
    for (auto& v : y) v = std::uniform_real_distribution<double>(0, 1)(gen) < rate;
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    const std::size_t k = 2 + gen() % 9;
    if (std::min(pos, n - pos) < k) continue;
    ++datasets;
    auto folds = learn::stratified_kfold(y, k, gen());
    std::vector<int> seen(n, 0);
    for (const auto& f : folds) {
      std::size_t fp = 0;
      for (auto i : f.validate) {
        ++seen[i];
        fp += static_cast<std::size_t>(y[i]);
      }
      const double expected = static_cast<double>(f.validate.size()) * static_cast<double>(pos) / static_cast<double>(n);
      if (std::abs(static_cast<double>(fp) - expected) > 1.0) ++bad;
      if (f.train.size() + f.validate.size() != n) ++bad;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) ++bad;
  }
  report(4, bad == 0, std::to_string(datasets) + " datasets, " + std::to_string(bad) + " violations");
}

// A decision-tree model whose leaf i returns probs[i] for input x = i.
learn::trained_model lookup_model(const std::vector<double>& probs) {
  const std::size_t n = probs.size();
  std::vector<std::vector<double>> x(n, std::vector<double>(1));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i][0] = static_cast<double>(i);
    y[i] = static_cast<int>(i % 2);
  }
  auto base = learn::train(learn::algorithm::decision_tree, encoded_matrix::from_rows(x, y, {"i"}),
                           learn::default_params(learn::algorithm::decision_tree));
  learn::tree t;
  // balanced tree over [lo, hi)
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi) -> int {
    const int id = static_cast<int>(t.feature.size());
    t.feature.push_back(-2);
    t.threshold.push_back(-2);
    t.left.push_back(-1);
    t.right.push_back(-1);
    t.value.push_back(hi - lo == 1 ? probs[lo] : 0.0);
    t.impurity.push_back(0);
    t.weight.push_back(static_cast<double>(hi - lo));
    t.count.push_back(static_cast<std::int64_t>(hi - lo));
    if (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      t.feature[static_cast<std::size_t>(id)] = 0;
      t.threshold[static_cast<std::size_t>(id)] = static_cast<double>(mid) - 0.5;
      const int l = self(self, lo, mid);
      const int r = self(self, mid, hi);
      t.left[static_cast<std::size_t>(id)] = l;
      t.right[static_cast<std::size_t>(id)] = r;
    }
    return id;
  };
  build(build, 0, n);
  auto doc = base.to_json();
  doc["trees"] = nlohmann::json::array({t.to_json()});
  return learn::trained_model::from_json(doc);
}

void soft_vote_identity() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> probs(10000);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    switch (i % 10) {
      case 0: probs[i] = 0.5; break;
      case 1: probs[i] = std::nextafter(0.5, 1.0); break;
      case 2: probs[i] = std::nextafter(0.5, 0.0); break;
      case 3: probs[i] = static_cast<double>(gen() % 11) / 10.0; break;
      default: probs[i] = u(gen);
    }
  }
  auto member = lookup_model(probs);
  std::vector<std::vector<double>> x(probs.size(), std::vector<double>(1));
  for (std::size_t i = 0; i < probs.size(); ++i) x[i][0] = static_cast<double>(i);
  auto probe = encoded_matrix::from_rows(x, std::vector<int>(probs.size(), 0), {"i"});
  // the single member's argmax, ties to the negative class
  std::vector<int> single(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) single[i] = probs[i] > 1.0 - probs[i] ? 1 : 0;
  bool member_ok = learn::predict_labels(member, probe) == single;
  std::size_t disagreements = 0;
  for (std::size_t k = 1; k <= 7; ++k) {
    learn::voting_model vote(std::vector<learn::trained_model>(k, member));
    auto labels = learn::soft_vote(vote, probe);
    for (std::size_t i = 0; i < labels.size(); ++i) disagreements += labels[i] != single[i];
  }
  report(5, member_ok && disagreements == 0,
         "k = 1..7 identical members on 10000 probability vectors, " + std::to_string(disagreements) + " disagreements");
}

void importance_ranking() {
  std::size_t wins = 0;
  std::string drops;
  pipeline_config cfg;
  cfg.tune = false;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 gen(seed * 7919);
    std::uniform_real_distribution<double> u(0, 1);
    const std::size_t n = 2000;
    std::vector<std::vector<double>> x(n, std::vector<double>(6));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x[i]) v = u(gen);
      y[i] = (x[i][0] > 0.6) != (u(gen) < 0.05);  // 5% label noise
    }
    auto m = encoded_matrix::from_rows(x, y, {"signal", "noise1", "noise2", "noise3", "noise4", "noise5"});
    auto split = learn::train_test_split(m.labels, 0.2, seed);
    cfg.seed = seed;
    auto vote = fit_vote(cfg, instance_kind::request, m.subset(split.train));
    auto imp = learn::permutation_importance(vote, m.subset(split.test), 10, seed);
    std::size_t top = 0;
    for (std::size_t g = 1; g < imp.size(); ++g)
      if (imp[g].median > imp[top].median) top = g;
    wins += top == 0;
    drops += fmt(" %.3f", imp[0].median);
  }
  report(6, wins >= 9, "informative feature ranked first in " + std::to_string(wins) + "/10 seeds; its median drops:" + drops);
}

struct dataset_paths {
  std::string crawl, fdns;
  std::vector<std::string> filters;
  std::string origin;
};

dataset_paths year_a(const fs::path& work) {
  if (const char* dir = std::getenv("CNAMECLOAK_DATASET_DIR")) {
    fs::path d(dir);
    if (fs::exists(d / "crawl.jsonl") && fs::exists(d / "fdns.json.gz"))
      return {(d / "crawl.jsonl").string(),
              (d / "fdns.json.gz").string(),
              {(d / "easyprivacy.txt").string(), (d / "adguard.txt").string()},
              "dataset at " + d.string()};
  }
  synthetic::options opt;
  opt.sites = 2000;
  auto p = synthetic::generate(opt).write(work / "corpus_a");
  return {p.crawl, p.fdns, {p.easyprivacy, p.adguard}, "synthetic corpus, 2000 sites"};
}

pipeline_config config_for(const dataset_paths& d, const fs::path& out) {
  pipeline_config cfg;
  cfg.crawl = d.crawl;
  cfg.fdns = d.fdns;
  cfg.filters = d.filters;
  cfg.out = out.string();
  return cfg;
}

void end_to_end_and_reproducibility(const fs::path& work, const dataset_paths& a) {
  auto cfg = config_for(a, work / "run");
  std::printf("info: end-to-end on %s\n", a.origin.c_str());
  auto t0 = clock_type::now();
  learn::metrics combined;
  try {
    cmd_label(cfg);
    cmd_features(cfg, {instance_kind::request});
    cmd_train(cfg, instance_kind::request);
    combined = cmd_evaluate(cfg, instance_kind::request).combined;
  } catch (const std::exception& e) {
    report(7, false, std::string("pipeline failed: ") + e.what());
    report(9, false, "no model to compare");
    return;
  }
  const double secs = seconds_since(t0);
  report(7, combined.f1 >= 0.95 && secs < 600.0,
         fmt("request F1 %.4f (precision %.4f, recall %.4f)", combined.f1, combined.precision, combined.recall) +
             fmt(" in %.0f s", secs));

  const auto model = cfg.out + "/request_model.json";
  const auto first = slurp(model);
  cmd_train(cfg, instance_kind::request);
  const auto second = slurp(model);
  report(9, !first.empty() && first == second,
         std::to_string(first.size()) + "-byte model file " + (first == second ? "identical" : "differs") + " after retraining");
}

void drift(const fs::path& work, const dataset_paths& a) {
  // year B: same generator with fresh cloaked prefixes, labeled with year A's lists
  synthetic::options opt;
  opt.sites = 2000;
  opt.seed = 8;
  opt.randomized_prefixes = true;
  auto pb = synthetic::generate(opt).write(work / "corpus_b");
  auto cfg_a = config_for(a, work / "drift_a");
  auto cfg_b = config_for({pb.crawl, pb.fdns, a.filters, ""}, work / "drift_b");
  cmd_label(cfg_a);
  cmd_label(cfg_b);
  auto ctx = pipeline_context::load(cfg_a, true);
  auto table_a = build_table(load_labeled(cfg_a.out + "/labeled.jsonl"), instance_kind::request, ctx);
  auto table_b = build_table(load_labeled(cfg_b.out + "/labeled.jsonl"), instance_kind::request, ctx);
  auto cfg = cfg_a;
  cfg.tune = false;
  auto ab = run_drift(cfg, instance_kind::request, table_a, table_b);
  auto aa = run_drift(cfg, instance_kind::request, table_a, table_a);
  const bool degraded = ab.cross_year.f1 > 0 && ab.cross_year.f1 < ab.same_year.f1;
  const bool exact = ab.delta_f1 == ab.same_year.f1 - ab.cross_year.f1;
  report(8, degraded && exact && aa.delta_f1 == 0.0,
         fmt("same-year F1 %.4f, cross-year F1 %.4f, delta %.4f", ab.same_year.f1, ab.cross_year.f1, ab.delta_f1) +
             fmt("; A vs A delta %.1f", aa.delta_f1));
}

}  // namespace

int main() {
  const auto work = fs::temp_directory_path() / "cnamecloak_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  matcher_golden();
  entropy_oracle();
  cart_oracle();
  fold_stratification();
  soft_vote_identity();
  importance_ranking();
  auto a = year_a(work);
  end_to_end_and_reproducibility(work, a);
  try {
    drift(work, a);
  } catch (const std::exception& e) {
    report(8, false, std::string("drift run failed: ") + e.what());
  }
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
