#include <gtest/gtest.h>

#include <sstream>

#include "cnamecloak/domain.hpp"
#include "cnamecloak/ingest.hpp"
#include "synthetic.hpp"

using namespace cnamecloak;

namespace {

const public_suffix_list& psl() {
  static const auto p = public_suffix_list::load(std::string(CNAMECLOAK_DATA_DIR) + "/psl/public_suffix_list.dat");
  return p;
}

std::string line(const std::string& site, const std::string& domain, const std::string& url, bool meta = false) {
  nlohmann::json j{{"site_id", site},         {"site_domain", domain}, {"url", url},
                   {"method", "get"},         {"content_type", "script"}, {"is_xhr", false},
                   {"is_third_party_window", false}, {"timestamp", 1.5}};
  if (meta) j["site_meta"] = {{"ranking", 12}, {"country", "JP"}, {"category", "news"}, {"script_call_count", 4}};
  return j.dump();
}

}  // namespace

TEST(Domain, RegistrableDomainUsesSuffixList) {
  EXPECT_EQ(psl().registrable_domain("a.b.example.co.uk"), "example.co.uk");
  EXPECT_EQ(psl().registrable_domain("WWW.Example.COM."), "example.com");
  EXPECT_EQ(psl().registrable_domain("foo.bar.kawasaki.jp"), "foo.bar.kawasaki.jp");  // *.kawasaki.jp wildcard
  EXPECT_EQ(psl().registrable_domain("city.kawasaki.jp"), "city.kawasaki.jp");       // !city.kawasaki.jp exception
  EXPECT_EQ(psl().registrable_domain("192.0.2.7"), "192.0.2.7");
  EXPECT_EQ(psl().public_suffix("x.example.co.uk"), "co.uk");
}

TEST(Domain, ClassifyParty) {
  EXPECT_EQ(classify_party("example.com", "example.com", psl()), party::first_domain);
  EXPECT_EQ(classify_party("www.example.com", "example.com", psl()), party::first_subdomain);
  EXPECT_EQ(classify_party("metric.example.com", "www.example.com", psl()), party::first_subdomain);
  EXPECT_EQ(classify_party("example.net", "example.com", psl()), party::third);
  EXPECT_EQ(classify_party("notexample.com", "example.com", psl()), party::third);
}

TEST(Domain, ParseUrl) {
  auto u = parse_url("HTTPS://User@Sub.Example.com:8443/p?q=1#f");
  EXPECT_EQ(u.scheme, "https");
  EXPECT_EQ(u.host, "sub.example.com");
  EXPECT_EQ(u.port, "8443");
  EXPECT_THROW(parse_url("not a url"), url_error);
  EXPECT_THROW(parse_url("https:///path"), url_error);
}

TEST(Ingest, RoundTripIsStructurallyEqual) {
  synthetic::options opt;
  opt.sites = 40;
  auto corpus = synthetic::generate(opt);
  std::stringstream ss;
  write_crawl(ss, corpus.sites);
  auto back = read_crawl(ss);
  ASSERT_EQ(back.size(), corpus.sites.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], corpus.sites[i]) << i;
}

TEST(Ingest, MetadataFromFirstLineAndDefaults) {
  std::stringstream ss;
  ss << line("s1", "example.com", "https://example.com/") << '\n'
     << line("s1", "example.com", "https://cdn.example.com/a.js", true) << '\n'
     << line("s2", "other.org", "https://other.org/") << '\n';
  auto sites = read_crawl(ss);
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[0].ranking, 12);
  EXPECT_EQ(sites[0].country, "JP");
  EXPECT_EQ(sites[0].requests.size(), 2u);
  EXPECT_EQ(sites[0].requests[0].method, "GET");
  EXPECT_EQ(sites[1].ranking, 0);
  EXPECT_EQ(sites[1].country, "UNK");
  EXPECT_EQ(sites[1].category, "UNK");
}

TEST(Ingest, SchemaErrorCarriesLineNumber) {
  std::stringstream ss;
  ss << line("s1", "example.com", "https://example.com/") << '\n' << R"({"site_id":"s1","site_domain":"example.com"})" << '\n';
  try {
    read_crawl(ss);
    FAIL() << "expected schema_error";
  } catch (const schema_error& e) {
    EXPECT_EQ(e.line_number, 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_EQ(e.family(), error_family::data);
  }
}

TEST(Ingest, BadUrlIsSchemaError) {
  std::stringstream ss;
  ss << line("s1", "example.com", "example.com/no-scheme") << '\n';
  EXPECT_THROW(read_crawl(ss), schema_error);
}

TEST(Ingest, MalformedLinesAreCountedAndSkipped) {
  std::stringstream ss;
  ss << line("s1", "example.com", "https://example.com/") << "\n{not json\n\n" << line("s1", "example.com", "https://a.example.com/") << '\n';
  load_report report;
  auto sites = read_crawl(ss, &report);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].requests.size(), 2u);
  EXPECT_EQ(report.malformed_lines, 1u);
  ASSERT_EQ(report.malformed_line_numbers.size(), 1u);
  EXPECT_EQ(report.malformed_line_numbers[0], 2u);
}

TEST(Fdns, ChainFollowsHops) {
  std::stringstream ss;
  ss << R"({"name":"a.example.com","type":"cname","value":"b.example.net"})" << '\n'
     << R"({"name":"b.example.net","type":"cname","value":"c.tracker.com"})" << '\n'
     << R"({"name":"c.tracker.com","type":"a","value":"192.0.2.1"})" << '\n';
  auto idx = read_fdns(ss);
  EXPECT_EQ(idx.size(), 2u);
  auto c = idx.chain("a.example.com");
  EXPECT_EQ(c.targets, (std::vector<std::string>{"b.example.net", "c.tracker.com"}));
  EXPECT_FALSE(c.truncated);
  EXPECT_TRUE(idx.chain("c.tracker.com").empty());
}

TEST(Fdns, LookupIgnoresCaseAndTrailingDot) {
  std::stringstream ss;
  ss << R"({"name":"Metric.Example.COM.","type":"CNAME","value":"X.Tracker.com."})" << '\n';
  auto idx = read_fdns(ss);
  EXPECT_TRUE(idx.contains("metric.example.com"));
  EXPECT_EQ(idx.chain("METRIC.example.com.").targets, std::vector<std::string>{"x.tracker.com"});
}

TEST(Fdns, LoopsAreCutAndLongChainsTruncated) {
  fdns_index loop;
  loop.add_cname("a.x.com", "b.x.com");
  loop.add_cname("b.x.com", "a.x.com");
  EXPECT_EQ(loop.chain("a.x.com").targets, std::vector<std::string>{"b.x.com"});

  fdns_index longc;
  for (int i = 0; i < 12; ++i) longc.add_cname("n" + std::to_string(i) + ".x.com", "n" + std::to_string(i + 1) + ".x.com");
  auto c = longc.chain("n0.x.com");
  EXPECT_EQ(c.targets.size(), max_cname_hops);
  EXPECT_TRUE(c.truncated);
}

TEST(Fdns, GzipAndPlainFilesLoad) {
  auto dir = std::filesystem::temp_directory_path() / "cnamecloak_fdns_test";
  std::filesystem::create_directories(dir);
  const std::string text = R"({"name":"m.example.com","type":"cname","value":"t.tracker.com"})" "\n";
  {
    std::ofstream(dir / "plain.json") << text;
    gzFile f = gzopen((dir / "dump.json.gz").c_str(), "wb");
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
  }
  EXPECT_TRUE(load_fdns((dir / "plain.json").string()).contains("m.example.com"));
  EXPECT_TRUE(load_fdns((dir / "dump.json.gz").string()).contains("m.example.com"));
  EXPECT_THROW(load_fdns((dir / "missing.json").string()), io_error);
}

TEST(Summary, PartitionsTotalRequests) {
  for (std::uint64_t seed : {1, 2, 3}) {
    synthetic::options opt;
    opt.sites = 60;
    opt.seed = seed;
    auto c = synthetic::generate(opt);
    auto t = dataset_summary(c.sites, psl());
    EXPECT_EQ(t.first_domain + t.first_subdomain + t.third_party, t.total_requests);
    EXPECT_EQ(t.total_sites, 60u);
    EXPECT_GT(t.first_subdomain, 0u);
  }
}
