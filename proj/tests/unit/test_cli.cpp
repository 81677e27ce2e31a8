#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "sbcep/ingest.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/sparql.hpp"

namespace fs = std::filesystem;
using namespace sbcep;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SBCEP_CLI_PATH + "\" " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("sbcep_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("convert --no-such-flag x.csv").code == 1);
  CHECK(cli("query").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("data errors exit 2") {
  TempDir dir;
  CHECK(cli("convert /nonexistent/input.csv").code == 2);
  CHECK(cli("query /nonexistent/store.nt humidity").code == 2);
  CHECK(cli("gen-store --triples 5 --classes 10 --entities 100").code == 2);
  write(dir / "bad.csv", "\"\",\"date\",\"Temperature\",\"Humidity\",\"Light\",\"CO2\",\"HumidityRatio\",\"Occupancy\"\n"
                         "\"1\",\"2015-02-02 14:19:00\",23.7,26.272,585.2,n/a,0.00476,1\n");
  CHECK(cli("convert " + (dir / "bad.csv")).code == 2);
  write(dir / "empty.nt", "");
  CHECK(cli("query " + (dir / "empty.nt") + " no-such-query").code == 2);
}

TEST_CASE("convert and query agree with the library") {
  TempDir dir;
  REQUIRE(cli("gen-dataset --rows 300 -o " + (dir / "data.csv")).code == 0);
  const std::string csv = read(dir / "data.csv");
  REQUIRE(lines(csv) == 301);

  write(dir / "header.csv", csv.substr(0, csv.find('\n') + 1));
  REQUIRE(cli("convert " + (dir / "header.csv") + " -o " + (dir / "header.nt")).code == 0);
  CHECK(read(dir / "header.nt").empty());

  REQUIRE(cli("convert " + (dir / "data.csv") + " -o " + (dir / "data.nt")).code == 0);
  const auto store = rdf::build_store(preprocess(load_csv(dir / "data.csv")));
  CHECK(lines(read(dir / "data.nt")) == store.size());

  for (const char* id : {"humidity", "temperature-window", "co2-readings", "occupied-co2"}) {
    INFO(id);
    auto r = cli("query " + (dir / "data.nt") + " " + id);
    REQUIRE(r.code == 0);
    const auto rs = sparql::evaluate(sparql::parse_query(sparql::find_query(id).text), store);
    CHECK(lines(r.out) == rs.size() + 1);
    CHECK(r.out == sparql::to_csv(rs));
  }

  write(dir / "q.rq", sparql::find_query("humidity").text);
  auto json = cli("query " + (dir / "data.nt") + " " + (dir / "q.rq") + " --format json");
  REQUIRE(json.code == 0);
  auto j = nlohmann::json::parse(json.out);
  CHECK(j["head"]["vars"] == nlohmann::json::array({"date", "humidity"}));

  write(dir / "broken.rq", "SELECT ?x WHERE { ?x");
  CHECK(cli("query " + (dir / "data.nt") + " " + (dir / "broken.rq")).code == 2);
}

TEST_CASE("rules, pipeline and bench subcommands") {
  TempDir dir;
  REQUIRE(cli("gen-dataset --rows 400 -o " + (dir / "data.csv")).code == 0);

  auto train = cli("train-rules " + (dir / "data.csv") + " -o " + (dir / "rules.txt"));
  REQUIRE(train.code == 0);
  CHECK(train.out.find("|---") != std::string::npos);
  CHECK(read(dir / "rules.txt").find("THEN") != std::string::npos);

  auto run = cli("run " + (dir / "data.csv") + " --rules " + (dir / "rules.txt") + " --alerts " +
                 (dir / "alerts.jsonl") + " --events " + (dir / "events.jsonl"));
  REQUIRE(run.code == 0);
  CHECK(run.out.find("events_in: 400") != std::string::npos);
  CHECK(lines(read(dir / "events.jsonl")) > 0);
  CHECK(cli("run " + (dir / "data.csv") + " --rules /nonexistent/rules.txt").code == 2);

  write(dir / "faults.txt", "at 100 fail A\nat 200 recover A\n");
  auto faulty = cli("run " + (dir / "data.csv") + " --faults " + (dir / "faults.txt"));
  CHECK(faulty.code == 0);
  CHECK(faulty.out.find("events_in: 400") != std::string::npos);

  auto bench = cli("bench --suite throughput --counts 100 --trials 1");
  REQUIRE(bench.code == 0);
  CHECK(bench.out.rfind("table,row,column", 0) == 0);
  CHECK(bench.out.find("throughput,Q1,100,") != std::string::npos);
  CHECK(cli("bench --suite nothing").code == 1);
}
