// make_synthetic_corpus: writes a generated crawl, FDNS dump and two
// filter lists into a directory.
//
//   make_synthetic_corpus --out corpus/ --sites 2000 --seed 7 [--shifted]

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic CNAME-cloaking corpus"};
  cnamecloak::synthetic::options opt;
  std::string out = "corpus";
  app.add_option("--out", out, "output directory");
  app.add_option("--sites", opt.sites, "number of sites");
  app.add_option("--seed", opt.seed, "generator seed");
  app.add_option("--cloak-rate", opt.cloak_rate, "fraction of sites with a cloaked subdomain");
  app.add_option("--self-analytics-rate", opt.self_analytics_rate, "fraction of sites with first-party beacons");
  app.add_flag("--shifted", opt.randomized_prefixes, "randomize every cloaked subdomain label");
  CLI11_PARSE(app, argc, argv);

  auto corpus = cnamecloak::synthetic::generate(opt);
  auto paths = corpus.write(out);
  std::cout << "sites " << corpus.sites.size() << ", cloaked " << corpus.planted_sites << '\n'
            << paths.crawl << '\n' << paths.fdns << '\n' << paths.easyprivacy << '\n' << paths.adguard << '\n';
  return 0;
}
