#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "inf2vec/events.hpp"
#include "inf2vec/metrics.hpp"
#include "test_support.hpp"

#ifndef INF2VEC_CLI_PATH
#error "INF2VEC_CLI_PATH must point at the built CLI binary"
#endif

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(INF2VEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTinyModelCfg =
    R"({"d_type":4,"d_time":2,"d_hidden":8,"M":2,"mode":"local","decoder":"density"})";
const char* kTinyTrainCfg =
    R"({"lr":0.02,"batch_size":8,"max_epochs":2,"patience":2,"seed":3})";

}  // namespace

TEST_CASE("simulate with zero sequences writes an empty dataset and exits 0") {
  TempDir dir;
  REQUIRE(run("simulate --preset haw5 --num-seqs 0 --horizon 10 --seed 1 --out " +
              dir.file("d")) == 0);
  REQUIRE(slurp(dir.file("d/data.jsonl")).empty());
  REQUIRE(inf2vec::load_meta(dir.file("d/meta.json")) == 5);
}

TEST_CASE("simulate twice with the same flags is byte-identical") {
  TempDir dir;
  std::string flags = "simulate --preset haw9 --num-seqs 6 --horizon 20 --seed 9 --out ";
  REQUIRE(run(flags + dir.file("a")) == 0);
  REQUIRE(run(flags + dir.file("b")) == 0);
  REQUIRE(slurp(dir.file("a/data.jsonl")) == slurp(dir.file("b/data.jsonl")));
  REQUIRE(!slurp(dir.file("a/data.jsonl")).empty());
  REQUIRE(slurp(dir.file("a/truth_params.json")) == slurp(dir.file("b/truth_params.json")));
}

TEST_CASE("unstable params exit nonzero") {
  TempDir dir;
  spit(dir.file("bad.json"), R"({"K":1,"mu":[0.2],"alpha":[[2.0]],"beta":[[1.0]]})");
  REQUIRE(run("simulate --params " + dir.file("bad.json") +
              " --num-seqs 1 --horizon 10 --seed 0 --out " + dir.file("d")) != 0);
}

TEST_CASE("split writes the three partition files with floor sizes") {
  TempDir dir;
  REQUIRE(run("simulate --preset haw5 --num-seqs 10 --horizon 15 --seed 2 --out " +
              dir.file("d")) == 0);
  REQUIRE(run("split --data " + dir.file("d") + " --seed 4") == 0);
  REQUIRE(inf2vec::load_jsonl(dir.file("d/train.jsonl"), 5).sequences.size() == 6);
  REQUIRE(inf2vec::load_jsonl(dir.file("d/valid.jsonl"), 5).sequences.size() == 2);
  REQUIRE(inf2vec::load_jsonl(dir.file("d/test.jsonl"), 5).sequences.size() == 2);

  // re-running is reproducible
  std::string first = slurp(dir.file("d/train.jsonl"));
  REQUIRE(run("split --data " + dir.file("d") + " --seed 4") == 0);
  REQUIRE(slurp(dir.file("d/train.jsonl")) == first);
}

TEST_CASE("split rejects ratios that do not sum to one") {
  TempDir dir;
  REQUIRE(run("simulate --preset haw5 --num-seqs 6 --horizon 10 --seed 3 --out " +
              dir.file("d")) == 0);
  REQUIRE(run("split --data " + dir.file("d") + " --ratios 0.5,0.2,0.2 --seed 0") != 0);
}

TEST_CASE("the full pipeline runs: simulate, split, train, evaluate, influence") {
  TempDir dir;
  spit(dir.file("model.json"), kTinyModelCfg);
  spit(dir.file("train.json"), kTinyTrainCfg);
  REQUIRE(run("simulate --preset haw5 --num-seqs 20 --horizon 30 --seed 5 --out " +
              dir.file("d")) == 0);
  REQUIRE(run("split --data " + dir.file("d") + " --seed 5") == 0);
  REQUIRE(run("train --data " + dir.file("d") + " --model-config " +
              dir.file("model.json") + " --train-config " + dir.file("train.json") +
              " --out " + dir.file("ckpt.bin")) == 0);
  REQUIRE(std::filesystem::exists(dir.file("ckpt.bin")));
  REQUIRE(std::filesystem::exists(dir.file("ckpt.bin.history.csv")));

  REQUIRE(run("evaluate --data " + dir.file("d/test.jsonl") + " --ckpt " +
              dir.file("ckpt.bin") + " --out " + dir.file("r1.json")) == 0);
  REQUIRE(run("evaluate --data " + dir.file("d/test.jsonl") + " --ckpt " +
              dir.file("ckpt.bin") + " --out " + dir.file("r2.json")) == 0);
  REQUIRE(slurp(dir.file("r1.json")) == slurp(dir.file("r2.json")));
  auto report = nlohmann::json::parse(slurp(dir.file("r1.json")));
  REQUIRE(report.contains("f1"));
  REQUIRE(report.contains("mae"));
  REQUIRE(report.contains("nll"));
  REQUIRE(report["f1"].get<double>() >= 0.0);
  REQUIRE(report["f1"].get<double>() <= 1.0);

  REQUIRE(run("influence --ckpt " + dir.file("ckpt.bin") + " --out " + dir.file("infl") +
              " --truth " + dir.file("d/truth_params.json")) == 0);
  auto scores = inf2vec::load_csv_matrix(dir.file("infl.csv"));
  REQUIRE(scores.size() == 5);
  REQUIRE(scores[0].size() == 5);
  auto alignment = nlohmann::json::parse(slurp(dir.file("infl_alignment.json")));
  REQUIRE(alignment["per_row"].size() == 5);
  REQUIRE(std::filesystem::exists(dir.file("infl.svg")));

  // pca truth reduction is also accepted
  REQUIRE(run("influence --ckpt " + dir.file("ckpt.bin") + " --out " + dir.file("i2") +
              " --truth " + dir.file("d/truth_params.json") +
              " --truth-reduction pca") == 0);
}

TEST_CASE("influence rejects a global-mode checkpoint") {
  TempDir dir;
  spit(dir.file("model.json"),
       R"({"d_type":4,"d_time":2,"d_hidden":8,"M":2,"mode":"global","decoder":"density"})");
  spit(dir.file("train.json"), kTinyTrainCfg);
  REQUIRE(run("simulate --preset haw5 --num-seqs 10 --horizon 20 --seed 6 --out " +
              dir.file("d")) == 0);
  REQUIRE(run("split --data " + dir.file("d") + " --seed 6") == 0);
  REQUIRE(run("train --data " + dir.file("d") + " --model-config " +
              dir.file("model.json") + " --train-config " + dir.file("train.json") +
              " --out " + dir.file("g.bin")) == 0);
  REQUIRE(run("influence --ckpt " + dir.file("g.bin") + " --out " + dir.file("i")) != 0);
}

TEST_CASE("missing inputs exit nonzero with no junk output") {
  TempDir dir;
  REQUIRE(run("train --data " + dir.file("nope") + " --model-config " +
              dir.file("m.json") + " --train-config " + dir.file("t.json") +
              " --out " + dir.file("c.bin")) != 0);
  REQUIRE(run("evaluate --data " + dir.file("missing.jsonl") + " --ckpt " +
              dir.file("c.bin") + " --out " + dir.file("r.json")) != 0);
  REQUIRE_FALSE(std::filesystem::exists(dir.file("c.bin")));
}

TEST_CASE("evaluate rejects an empty test file") {
  TempDir dir;
  spit(dir.file("model.json"), kTinyModelCfg);
  spit(dir.file("train.json"), kTinyTrainCfg);
  REQUIRE(run("simulate --preset haw5 --num-seqs 8 --horizon 20 --seed 7 --out " +
              dir.file("d")) == 0);
  REQUIRE(run("split --data " + dir.file("d") + " --seed 7") == 0);
  REQUIRE(run("train --data " + dir.file("d") + " --model-config " +
              dir.file("model.json") + " --train-config " + dir.file("train.json") +
              " --out " + dir.file("c.bin")) == 0);
  spit(dir.file("empty.jsonl"), "");
  REQUIRE(run("evaluate --data " + dir.file("empty.jsonl") + " --ckpt " +
              dir.file("c.bin") + " --out " + dir.file("r.json")) != 0);
}

TEST_CASE("unknown flags are rejected") {
  REQUIRE(run("simulate --bogus 1") != 0);
  REQUIRE(run("frobnicate") != 0);
}
