#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jil/cost.hpp"
#include "jil/io.hpp"
#include "jil/segment.hpp"

using namespace jil;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("jil_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const std::string tag = std::to_string(counter++);
  const std::string out = path("stdout" + tag), err = path("stderr" + tag);
  const std::string cmd = env + " '" JIL_CLI "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// Value of a "key<TAB>..." line of the fit report.
std::vector<std::string> report_line(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string first;
    std::getline(fields, first, '\t');
    if (first != key) continue;
    std::vector<std::string> rest;
    for (std::string f; std::getline(fields, f, '\t');) rest.push_back(f);
    return rest;
  }
  return {};
}

std::vector<std::vector<std::string>> read_tsv(const std::string& file) {
  std::istringstream in(slurp(file));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::istringstream fields(line);
    rows.emplace_back();
    for (std::string f; std::getline(fields, f, '\t');) rows.back().push_back(f);
  }
  return rows;
}

void simulate_s1(const std::string& file, int n, int seed) {
  REQUIRE(run_cli("simulate --scenario 1 --n " + std::to_string(n) + " --p 4 --seed " +
              std::to_string(seed) + " --out '" + file + "'")
              .code == 0);
}

}  // namespace

TEST_CASE("simulate is byte-for-byte reproducible") {
  REQUIRE(run_cli("simulate --scenario 1 --n 5 --seed 7 --p 4 --out " + path("a.csv")).code == 0);
  REQUIRE(run_cli("simulate --scenario 1 --n 5 --seed 7 --p 4 --out " + path("b.csv")).code == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));

  REQUIRE(run_cli("simulate --scenario 3 --n 1000 --p 3 --seed 1 --out " + path("c.csv")).code == 0);
  const std::string text = slurp(path("c.csv"));
  CHECK(text.substr(0, text.find('\n')) == "y,a,x1,x2,x3");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1001);
}

TEST_CASE("fit recovers the Scenario 1 change points") {
  simulate_s1(path("s1.csv"), 800, 11);
  const Run r = run_cli("fit --data " + path("s1.csv") + " --method ljil --seed 3 --out " + path("s1.json"));
  REQUIRE(r.code == 0);
  const auto intervals = report_line(r.out, "intervals");
  REQUIRE(intervals.size() == 1);
  CHECK(intervals[0] == "3");
  const auto cps = report_line(r.out, "change_points");
  REQUIRE(cps.size() == 2);
  CHECK(std::abs(std::stod(cps[0]) - 0.35) <= 0.05);
  CHECK(std::abs(std::stod(cps[1]) - 0.65) <= 0.05);
  CHECK(report_line(r.out, "interval").size() == 2 + 5);
  CHECK(fs::exists(path("s1.json")));
}

TEST_CASE("intercept-only step data matches the enumeration oracle") {
  Rng rng(12);
  Dataset d;
  d.p = 0;
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform();
    d.treatments.push_back(a);
    d.outcomes.push_back((a < 0.6 ? 1.0 : -1.0) + 0.2 * rng.normal());
  }
  d.n = d.outcomes.size();
  io::write_csv(path("step.csv"), d);
  REQUIRE(run_cli("fit --data " + path("step.csv") + " --out " + path("step.json")).code == 0);
  const auto art = io::load_artifact(path("step.json"));
  const int m = art.fit.m;
  REQUIRE(m == 10);
  const double lambda = art.fit.lambda;
  const CostFn costfn = [&](const Interval& iv) { return cost(d, iv, lambda); };
  const Segmentation best = enumerate_partitions(costfn, m, art.fit.gamma);
  CHECK(art.fit.partition == best.partition);
  CHECK(art.fit.partition.interior_boundaries() == std::vector<int>{6});
}

TEST_CASE("malformed rows give a data error naming the row") {
  std::ofstream(path("bad.csv")) << "y,a,x1\n1,0.5,0.2\n2,0.3,oops\n";
  const Run r = run_cli("fit --data " + path("bad.csv") + " --out " + path("bad.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("row 3") != std::string::npos);
  CHECK_FALSE(fs::exists(path("bad.json")));
}

TEST_CASE("evaluate reproduces the fit report") {
  simulate_s1(path("e.csv"), 400, 13);
  const Run fit = run_cli("fit --data " + path("e.csv") + " --lambda 0 --gamma auto --out " + path("e.json"));
  REQUIRE(fit.code == 0);
  const double reported = std::stod(report_line(fit.out, "value").at(0));

  const Run wide = run_cli("evaluate --model " + path("e.json") + " --data " + path("e.csv") + " --alpha 0.05");
  REQUIRE(wide.code == 0);
  const auto w = nlohmann::json::parse(wide.out);
  CHECK(std::abs(w["v_hat"].get<double>() - reported) <= 1e-12);

  const Run narrow = run_cli("evaluate --model " + path("e.json") + " --data " + path("e.csv") + " --alpha 0.10");
  REQUIRE(narrow.code == 0);
  const auto nr = nlohmann::json::parse(narrow.out);
  CHECK(nr["ci_lo"].get<double>() > w["ci_lo"].get<double>());
  CHECK(nr["ci_hi"].get<double>() < w["ci_hi"].get<double>());

  for (const std::string pref : {"min", "max", "mid", "uniform"}) {
    const std::string plot = path("plot_" + pref + ".tsv");
    REQUIRE(run_cli("evaluate --model " + path("e.json") + " --data " + path("e.csv") + " --pref " + pref +
                " --plot-data " + plot)
                .code == 0);
    const auto rows = read_tsv(plot);
    REQUIRE(rows.size() == 401);
    CHECK(rows[0] == std::vector<std::string>{"index", "lo", "hi", "dose"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double lo = std::stod(rows[i][1]), hi = std::stod(rows[i][2]), dose = std::stod(rows[i][3]);
      CHECK(dose >= lo);
      CHECK(dose <= hi);
    }
  }
}

TEST_CASE("evaluate rejects data of the wrong dimension") {
  simulate_s1(path("p4.csv"), 200, 14);
  REQUIRE(run_cli("fit --data " + path("p4.csv") + " --lambda 0 --gamma 0.05 --out " + path("p4.json")).code == 0);
  REQUIRE(run_cli("simulate --scenario 1 --n 50 --p 3 --out " + path("p3.csv")).code == 0);
  const Run r = run_cli("evaluate --model " + path("p4.json") + " --data " + path("p3.csv"));
  CHECK(r.code == 2);
}

TEST_CASE("fit artifacts are reproducible with a fixed timestamp") {
  simulate_s1(path("r.csv"), 300, 15);
  const std::string env = "SOURCE_DATE_EPOCH=1700000000";
  REQUIRE(run_cli("fit --data " + path("r.csv") + " --seed 4 --out " + path("r1.json"), env).code == 0);
  REQUIRE(run_cli("fit --data " + path("r.csv") + " --seed 4 --out " + path("r2.json"), env).code == 0);
  CHECK(slurp(path("r1.json")) == slurp(path("r2.json")));
  CHECK(slurp(path("r1.json")).find("2023-11-14T22:13:20Z") != std::string::npos);
}

TEST_CASE("treatments outside the unit interval are normalized") {
  std::ofstream out(path("wide.csv"));
  out << "y,a,x1\n";
  Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(10.0, 50.0);
    out << (a < 30.0 ? 0.0 : 2.0) + 0.1 * rng.normal() << ',' << a << ',' << rng.uniform(-1, 1) << '\n';
  }
  out.close();
  const Run r = run_cli("fit --data " + path("wide.csv") + " --lambda 0 --gamma 0.05 --out " + path("wide.json"));
  REQUIRE(r.code == 0);
  const auto art = io::load_artifact(path("wide.json"));
  REQUIRE(art.provenance.treatment_scale.has_value());
  CHECK(art.provenance.treatment_scale->min >= 10.0);
  CHECK(art.provenance.treatment_scale->max <= 50.0);
  const Run e = run_cli("evaluate --model " + path("wide.json") + " --data " + path("wide.csv"));
  REQUIRE(e.code == 0);
  CHECK(std::abs(nlohmann::json::parse(e.out)["v_hat"].get<double>() -
                 std::stod(report_line(r.out, "value").at(0))) <= 1e-12);
}

TEST_CASE("bench smoke run is reproducible") {
  const std::string args = "bench --scenario 1 --n 200 --reps 50 --seed 9";
  const Run a = run_cli(args);
  const Run b = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto header = a.out.substr(0, a.out.find('\n'));
  CHECK(header == "scenario\tn\tp\tmethod\treps\tvalue\tstd_error\tcoverage\tpartitions\tl2_loss\toptimal");
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 2);
}

TEST_CASE("exit codes") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("simulate --n 10").code == 1);
  CHECK(run_cli("simulate --scenario 9 --n 10 --out " + path("x.csv")).code == 1);
  CHECK(run_cli("fit --data " + path("a.csv") + " --lambda -1 --gamma 0.1 --out " + path("x.json")).code == 1);
  CHECK(run_cli("fit --data " + path("a.csv") + " --lambda 0 --gamma soon --out " + path("x.json")).code == 1);
  CHECK(run_cli("fit --data " + path("missing.csv") + " --out " + path("x.json")).code == 2);
  CHECK(run_cli("simulate --scenario 1 --n 10 --p 0 --out " + path("x.csv")).code == 1);
  CHECK(run_cli("--help").code == 0);
}
