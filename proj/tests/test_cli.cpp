#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "helpers.hpp"
#include "mnclust/io.hpp"

using namespace mnclust;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("mnclust_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MNCLUST_CLI_PATH) + " " + args +
                          " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream f(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    const auto sp = line.find(' ');
    if (sp != std::string::npos) kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  return kv;
}

// Small labeled training set written by the generator subcommand.
std::string gen_small(const TempDir& tmp, std::uint64_t seed = 11) {
  const std::string dir = tmp.file("data");
  REQUIRE(run_cli("gen --out " + dir + " --seed " + std::to_string(seed) +
                  " --cases 600 --test-cases 200 --vars 40 --keep 15") == 0);
  return dir;
}

}  // namespace

TEST_CASE("CLI exit codes") {
  TempDir tmp;
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  CHECK(run_cli("fit --k 2") == 2);  // missing required --data
  CHECK(run_cli("fit --data " + tmp.file("nope.csv") + " --k 2") == 1);
  std::ofstream(tmp.file("bad.csv")) << "a,b\n0,x\n";
  CHECK(run_cli("fit --data " + tmp.file("bad.csv") + " --k 2") == 2);
}

TEST_CASE("gen writes train, test and manifest") {
  TempDir tmp;
  const std::string dir = gen_small(tmp);
  REQUIRE(fs::exists(dir + "/train.csv"));
  REQUIRE(fs::exists(dir + "/test.csv"));
  REQUIRE(fs::exists(dir + "/manifest.txt"));

  auto train = read_dataset_csv(dir + "/train.csv");
  CHECK(train.n_cases() == 600);
  CHECK(train.n_vars() == 15);
  REQUIRE(train.labels);
  auto test = read_dataset_csv(dir + "/test.csv");
  CHECK(test.n_cases() == 200);
  CHECK(test.schema.names == train.schema.names);

  auto kv = read_kv(dir + "/manifest.txt");
  CHECK(kv["seed"] == "11");
  CHECK(kv["n_keep"] == "15");
  CHECK(kv.count("retained_variables") == 1);
  CHECK(kv.count("mean_parent_count") == 1);

  // a rerun with the same seed is byte-identical
  const std::string dir2 = tmp.file("data2");
  REQUIRE(run_cli("gen --out " + dir2 +
                  " --seed 11 --cases 600 --test-cases 200 --vars 40 --keep 15") == 0);
  CHECK(read_text(dir2 + "/train.csv") == read_text(dir + "/train.csv"));
  CHECK(read_text(dir2 + "/test.csv") == read_text(dir + "/test.csv"));

  // a different seed is not
  const std::string dir3 = tmp.file("data3");
  REQUIRE(run_cli("gen --out " + dir3 +
                  " --seed 12 --cases 600 --test-cases 200 --vars 40 --keep 15") == 0);
  CHECK(read_text(dir3 + "/train.csv") != read_text(dir + "/train.csv"));
}

TEST_CASE("fit writes a loadable model and a run record") {
  TempDir tmp;
  const std::string dir = gen_small(tmp);
  const std::string model = tmp.file("m.model");
  const std::string rec = tmp.file("fit.txt");
  REQUIRE(run_cli("fit --data " + dir + "/train.csv --algo em --init marginal"
                  " --k 3 --seed 5 --model-out " + model +
                  " --record-out " + rec) == 0);
  auto [m, schema] = read_model(model);
  CHECK(m.K == 3);
  CHECK(schema.n_vars() == 15);
  REQUIRE_NOTHROW(m.validate());

  auto kv = read_kv(rec);
  CHECK(kv["algorithm"] == "em");
  CHECK(kv["init"] == "marginal");
  CHECK(kv["k"] == "3");
  CHECK(kv["converged"] == "1");

  // reruns are byte-identical
  const std::string model2 = tmp.file("m2.model");
  REQUIRE(run_cli("fit --data " + dir + "/train.csv --algo em --init marginal"
                  " --k 3 --seed 5 --model-out " + model2) == 0);
  CHECK(read_text(model2) == read_text(model));

  // cem and hac also produce valid models
  for (std::string algo : {"cem", "hac"}) {
    REQUIRE(run_cli("fit --data " + dir + "/train.csv --algo " + algo +
                    " --k 3 --seed 5 --model-out " + model2) == 0);
    REQUIRE_NOTHROW(read_model(model2).first.validate());
  }
}

TEST_CASE("sweep writes a score table and the winning model") {
  TempDir tmp;
  const std::string dir = gen_small(tmp);
  const std::string table = tmp.file("sweep.tsv");
  const std::string model = tmp.file("best.model");
  REQUIRE(run_cli("sweep --data " + dir + "/train.csv --algo em --kmin 1"
                  " --kmax 4 --seed 3 --out " + table +
                  " --model-out " + model) == 0);
  const std::string text = read_text(table);
  CHECK(text.find("k\tcs_bits_per_case") == 0);
  CHECK(text.find("k_star\t") != std::string::npos);
  // 1 header + 4 entries + k_star line
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
  auto [m, schema] = read_model(model);
  CHECK(m.K >= 1);
  CHECK(m.K <= 4);

  // hac sweep shares one agglomeration across levels; subsample via fit data
  const std::string htable = tmp.file("hsweep.tsv");
  REQUIRE(run_cli("sweep --data " + dir + "/train.csv --algo hac --kmin 1"
                  " --kmax 4 --out " + htable) == 0);
  CHECK(read_text(htable).find("k_star\t") != std::string::npos);
}

TEST_CASE("eval reports holdout likelihood and accuracy") {
  TempDir tmp;
  const std::string dir = gen_small(tmp);
  const std::string model = tmp.file("m.model");
  REQUIRE(run_cli("fit --data " + dir + "/train.csv --algo em --k 3 --seed 5"
                  " --model-out " + model) == 0);
  const std::string rep = tmp.file("eval.txt");
  REQUIRE(run_cli("eval --model " + model + " --data " + dir +
                  "/test.csv --out " + rep) == 0);
  auto kv = read_kv(rep);
  REQUIRE(kv.count("holdout_l_bits") == 1);
  const double bits = parse_double(kv["holdout_l_bits"], 1);
  CHECK(bits < 0.0);
  CHECK(bits > -15.0);
  REQUIRE(kv.count("class_acc") == 1);
  const double acc = parse_double(kv["class_acc"], 1);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  CHECK(kv.count("effective_k") == 1);

  // schema mismatch: model over 15 vars, data over 40
  const std::string dir2 = tmp.file("d2");
  REQUIRE(run_cli("gen --out " + dir2 +
                  " --seed 11 --cases 100 --test-cases 50 --vars 30 --keep 12") == 0);
  CHECK(run_cli("eval --model " + model + " --data " + dir2 + "/test.csv") == 2);
}

TEST_CASE("bench produces raw runs and aggregated reports") {
  TempDir tmp;
  const std::string dir = gen_small(tmp);
  const std::string out = tmp.file("bench");
  REQUIRE(run_cli("bench --train " + dir + "/train.csv --test " + dir +
                  "/test.csv --algos em,cem --inits marginal --seeds 1,2"
                  " --kmin 1 --kmax 3 --preset runtime-eq-synth --out " + out) == 0);
  REQUIRE(fs::exists(out + "/raw_runs.tsv"));
  REQUIRE(fs::exists(out + "/report.tsv"));
  REQUIRE(fs::exists(out + "/report.txt"));

  const std::string raw = read_text(out + "/raw_runs.tsv");
  CHECK(raw.find("algo\tinit\tseed\tok") == 0);
  CHECK(std::count(raw.begin(), raw.end(), '\n') == 5);  // header + 2x2 runs

  const std::string report = read_text(out + "/report.tsv");
  CHECK(report.find("marginal_l_bits_mean") != std::string::npos);
  CHECK(std::count(report.begin(), report.end(), '\n') == 3);  // header + em + cem
  CHECK(read_text(out + "/report.txt").find("em+marginal") != std::string::npos);
}
