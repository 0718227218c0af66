// Runs the cogat executable end to end. COGAT_BIN is set by the build.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "cogat/checkpoint.hpp"
#include "cogat/model.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "cogat_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

Run run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" COGAT_BIN "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kTrainConfig =
    "train_path = data/train.jsonl\n"
    "dev_path = data/dev.jsonl\n"
    "hidden_dim = 16\n"
    "heads = 2\n"
    "vocab_dim = 512\n"
    "learning_rate = 0.01\n"
    "eval_interval = 20\n"
    "max_steps = 40\n"
    "epochs = 50\n";

// Synthesizes data and trains one small model, once per process.
void prepare() {
  static bool done = false;
  if (done) return;
  REQUIRE(run("synth --seed 5 --n 120 --noise 0.5 --out-dir data").code == 0);
  write(workdir() / "train.conf", kTrainConfig);
  REQUIRE(run("train --config train.conf --set out_dir=run1").code == 0);
  done = true;
}

}  // namespace

TEST_CASE("synth") {
  prepare();
  REQUIRE(run("synth --seed 5 --n 120 --noise 0.5 --out-dir data2").code == 0);
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
    CHECK(slurp(workdir() / "data" / f) == slurp(workdir() / "data2" / f));
  }
  const auto r = run("synth --n 10 --out-dir data3");
  CHECK(r.code == 2);
  CHECK(run("synth --noise 2").code == 2);
}

TEST_CASE("train") {
  prepare();
  for (const char* f : {"checkpoint.ckpt", "train_log.csv", "config.resolved.txt"}) CHECK(fs::exists(workdir() / "run1" / f));
  CHECK(slurp(workdir() / "run1" / "config.resolved.txt").find("hidden_dim = 16\n") != std::string::npos);

  REQUIRE(run("train --config train.conf --set out_dir=run2").code == 0);
  CHECK(slurp(workdir() / "run1" / "train_log.csv") == slurp(workdir() / "run2" / "train_log.csv"));
  CHECK(slurp(workdir() / "run1" / "checkpoint.ckpt") == slurp(workdir() / "run2" / "checkpoint.ckpt"));

  const auto missing = run("train --config train.conf --set train_path=data/absent.jsonl --set out_dir=run3");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("data/absent.jsonl") != std::string::npos);
  CHECK_FALSE(fs::exists(workdir() / "run3"));

  const auto bad = run("train --config train.conf --set hidden_dim=15");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("'heads'") != std::string::npos);
  CHECK(run("train --config train.conf --set nonsense=1").code == 2);
  CHECK(run("train --config nowhere.conf").code == 2);
  CHECK(run("train --config train.conf --set learning_rate").code == 2);
}

TEST_CASE("eval and score agree") {
  prepare();
  const auto e1 = run("eval run1/checkpoint.ckpt data/dev.jsonl --out-dir ev1");
  REQUIRE(e1.code == 0);
  REQUIRE(run("eval run1/checkpoint.ckpt data/dev.jsonl --out-dir ev2").code == 0);
  CHECK(slurp(workdir() / "ev1" / "metrics.json") == slurp(workdir() / "ev2" / "metrics.json"));
  CHECK(slurp(workdir() / "ev1" / "records.jsonl") == slurp(workdir() / "ev2" / "records.jsonl"));

  const auto metrics = nlohmann::json::parse(slurp(workdir() / "ev1" / "metrics.json"));
  CHECK(metrics.at("mode") == "soft");
  CHECK(metrics.contains("entropy_aggregation"));

  const auto s = run("score ev1/records.jsonl data/dev.jsonl");
  REQUIRE(s.code == 0);
  CHECK(s.out == e1.out);

  // Line order does not matter.
  std::vector<std::string> lines;
  std::istringstream is(slurp(workdir() / "ev1" / "records.jsonl"));
  for (std::string line; std::getline(is, line);) lines.push_back(line);
  std::reverse(lines.begin(), lines.end());
  std::string reversed;
  for (const auto& l : lines) reversed += l + "\n";
  write(workdir() / "reversed.jsonl", reversed);
  CHECK(run("score reversed.jsonl data/dev.jsonl").out == e1.out);
}

TEST_CASE("eval errors") {
  prepare();
  const auto missing = run("eval run1/absent.ckpt data/dev.jsonl");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("run1/absent.ckpt") != std::string::npos);
  CHECK(run("eval run1/checkpoint.ckpt data/dev.jsonl --alpha 1.5").code == 2);
  CHECK(run("eval run1/checkpoint.ckpt data/dev.jsonl --mode fuzzy").code == 2);

  write(workdir() / "wide.conf", "hidden_dim = 32\n");
  const auto mismatch = run("eval run1/checkpoint.ckpt data/dev.jsonl --config wide.conf");
  CHECK(mismatch.code == 3);
  CHECK(mismatch.err.find("hidden_dim") != std::string::npos);

  write(workdir() / "junk.ckpt", "{\"format\":\"other\"}\n");
  CHECK(run("eval junk.ckpt data/dev.jsonl").code == 3);

  // Non-finite weights surface as a numeric failure.
  auto ckpt = cogat::load_checkpoint(workdir() / "run1" / "checkpoint.ckpt");
  auto params = cogat::ModelParams::from_checkpoint(ckpt);
  params.label_bias.mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  cogat::save_checkpoint(workdir() / "nan.ckpt", params.to_checkpoint());
  CHECK(run("eval nan.ckpt data/dev.jsonl --out-dir evnan").code == 4);
}

TEST_CASE("analyze") {
  prepare();
  REQUIRE(run("train --config train.conf --set out_dir=base --set mode=no_mask").code == 0);
  REQUIRE(run("eval run1/checkpoint.ckpt data/dev.jsonl --out-dir ev3").code == 0);
  const auto r = run(
      "analyze run1/checkpoint.ckpt data/dev.jsonl --sweep-alphas 0,0.5,1 --entropy base/checkpoint.ckpt --nei-curve "
      "--out-dir an");
  REQUIRE(r.code == 0);
  const std::string sweep = slurp(workdir() / "an" / "sweep.csv");
  CHECK(sweep.rfind("alpha,nei_fraction,label_accuracy,edge_entropy,node_entropy\n", 0) == 0);
  std::istringstream rows(sweep);
  std::string line, last;
  while (std::getline(rows, line)) last = line;
  const auto metrics = nlohmann::json::parse(slurp(workdir() / "ev3" / "metrics.json"));
  std::ostringstream acc;
  acc.precision(10);
  acc << metrics.at("label_accuracy").get<double>();
  CHECK(last.rfind("1,", 0) == 0);
  CHECK(last.find("," + acc.str() + ",") != std::string::npos);

  const std::string entropy = slurp(workdir() / "an" / "entropy.csv");
  CHECK(entropy.find("cogat,soft,") != std::string::npos);
  CHECK(entropy.find("baseline,no_mask,") != std::string::npos);
  CHECK(fs::exists(workdir() / "an" / "nei_curve.csv"));

  const auto empty = run("analyze run1/checkpoint.ckpt data/dev.jsonl --sweep-alphas , --out-dir an2");
  CHECK(empty.code == 2);
  CHECK(empty.err.find("alpha_grid") != std::string::npos);
  CHECK(run("analyze run1/checkpoint.ckpt data/dev.jsonl --sweep-alphas 1,0").code == 2);
  CHECK(run("analyze run1/checkpoint.ckpt data/dev.jsonl --entropy nowhere.ckpt").code == 2);
}

TEST_CASE("score fixtures") {
  write(workdir() / "gold.jsonl",
        R"({"id":1,"claim":"A is b .","label":"SUPPORTS","candidates":[["A",0,"A is b ."],["A",1,"A is c ."]],"evidence":[[["A",0]]]})"
        "\n"
        R"({"id":2,"claim":"A is d .","label":"REFUTES","candidates":[["A",2,"A is not d ."]],"evidence":[[["A",2],["A",3]]]})"
        "\n"
        R"({"id":3,"claim":"A is e .","label":"NOT ENOUGH INFO","candidates":[],"evidence":[]})"
        "\n"
        R"({"id":4,"claim":"A is f .","label":"SUPPORTS","candidates":[["A",4,"A is f ."]],"evidence":[[["A",4]]]})"
        "\n");
  write(workdir() / "oracle.jsonl",
        R"({"id":1,"predicted_label":"SUPPORTS","predicted_evidence":[["A",0]]})"
        "\n"
        R"({"id":2,"predicted_label":"REFUTES","predicted_evidence":[["A",2],["A",3]]})"
        "\n"
        R"({"id":3,"predicted_label":"NOT ENOUGH INFO","predicted_evidence":[]})"
        "\n"
        R"({"id":4,"predicted_label":"SUPPORTS","predicted_evidence":[["A",4]]})"
        "\n");
  const auto oracle = run("score oracle.jsonl gold.jsonl --json");
  REQUIRE(oracle.code == 0);
  const auto o = nlohmann::json::parse(oracle.out);
  for (const char* k : {"label_accuracy", "fever_score", "precision@5", "recall@5", "f1@5"}) CHECK(o.at(k) == 1.0);

  // Hand count: labels right on 1, 2, 3; gold group covered on 1 only; 4 predicted sentences, 2 gold.
  write(workdir() / "mixed.jsonl",
        R"({"id":1,"predicted_label":"SUPPORTS","predicted_evidence":[["A",0],["A",1]]})"
        "\n"
        R"({"id":2,"predicted_label":"REFUTES","predicted_evidence":[["A",2]]})"
        "\n"
        R"({"id":3,"predicted_label":"NOT ENOUGH INFO","predicted_evidence":[]})"
        "\n"
        R"({"id":4,"predicted_label":"REFUTES","predicted_evidence":[["A",5]]})"
        "\n");
  const auto mixed = run("score mixed.jsonl gold.jsonl --json");
  REQUIRE(mixed.code == 0);
  const auto m = nlohmann::json::parse(mixed.out);
  CHECK(m.at("label_accuracy") == 0.75);
  CHECK(m.at("fever_score") == 0.5);
  CHECK(m.at("precision@5").get<double>() == doctest::Approx(0.5));
  CHECK(m.at("recall@5").get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(m.at("f1@5").get<double>() == doctest::Approx(0.4));

  write(workdir() / "broken.jsonl", R"({"id":1,"predicted_label":"SUPPORTS","predicted_evidence":[]})"
                                    "\n{oops\n");
  const auto broken = run("score broken.jsonl gold.jsonl");
  CHECK(broken.code == 2);
  CHECK(broken.err.find("broken.jsonl:2:") != std::string::npos);
  CHECK(run("score oracle.jsonl absent.jsonl").code == 2);
  CHECK(run("").code == 2);
}
