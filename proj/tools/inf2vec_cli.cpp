// Command-line front end for the inf2vec toolkit: Hawkes simulation,
// dataset splitting, maximum-likelihood training, evaluation, and
// influence-matrix extraction. Every subcommand is deterministic given its
// flags, input files, and seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inf2vec/inf2vec.hpp"

namespace fs = std::filesystem;
using namespace inf2vec;

namespace {

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> out{};
  double a, b, c;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
    throw error(cat("cannot parse ratios '", text, "' (expected a,b,c)"));
  out = {a, b, c};
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), cat("cannot open '", path, "'"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("bad JSON in '", path, "': ", e.what()));
  }
  return j;
}

int run_simulate(const std::string& params_path, const std::string& preset,
                 int num_seqs, double horizon, uint64_t seed,
                 const std::string& out_dir) {
  require(params_path.empty() != preset.empty(),
          "simulate: give exactly one of --params or --preset");
  HawkesParams params =
      preset.empty() ? load_params(params_path) : preset_params(preset);
  require_stable(params);

  fs::create_directories(out_dir);
  Dataset data = simulate_dataset(params, num_seqs, horizon, seed);
  save_jsonl(data, out_dir + "/data.jsonl");
  save_meta(params.K, out_dir + "/meta.json");
  export_truth(params, out_dir + "/truth_params.json");

  std::vector<double> analytic = stationary_rate(params);
  std::vector<double> counts(static_cast<size_t>(params.K), 0.0);
  for (const auto& seq : data.sequences)
    for (const auto& e : seq.events) counts[static_cast<size_t>(e.type_id)] += 1.0;
  double total_time = data.total_time();
  std::printf("simulated %d sequences, %zu events, horizon %g\n", num_seqs,
              data.total_events(), horizon);
  for (int k = 0; k < params.K; ++k) {
    double emp = total_time > 0.0 ? counts[static_cast<size_t>(k)] / total_time : 0.0;
    std::printf("type %d: empirical rate %.4f, analytic stationary rate %.4f\n", k,
                emp, analytic[static_cast<size_t>(k)]);
  }
  return 0;
}

int run_split(const std::string& data_dir, const std::string& ratios_text,
              uint64_t seed) {
  int num_types = load_meta(data_dir + "/meta.json");
  Dataset data = load_jsonl(data_dir + "/data.jsonl", num_types);
  SplitSpec spec;
  spec.ratios = parse_ratios(ratios_text);
  spec.seed = seed;
  auto [train_ds, valid_ds, test_ds] = split_dataset(data, spec);
  save_jsonl(train_ds, data_dir + "/train.jsonl");
  save_jsonl(valid_ds, data_dir + "/valid.jsonl");
  save_jsonl(test_ds, data_dir + "/test.jsonl");
  std::printf("split %zu sequences into %zu/%zu/%zu\n", data.sequences.size(),
              train_ds.sequences.size(), valid_ds.sequences.size(),
              test_ds.sequences.size());
  return 0;
}

int run_train(const std::string& data_dir, const std::string& model_cfg_path,
              const std::string& train_cfg_path, const std::string& out_path,
              std::string history_path) {
  int num_types = load_meta(data_dir + "/meta.json");
  Dataset train_ds = load_jsonl(data_dir + "/train.jsonl", num_types);
  Dataset valid_ds = load_jsonl(data_dir + "/valid.jsonl", num_types);

  nlohmann::json mj = read_json_file(model_cfg_path);
  if (!mj.contains("K")) mj["K"] = num_types;
  ModelConfig mcfg = config_from_json(mj);
  TrainConfig tcfg = train_config_from_json(read_json_file(train_cfg_path));

  TrainResult result = train(mcfg, train_ds, valid_ds, tcfg);
  save_checkpoint(result.best, out_path);
  if (history_path.empty()) history_path = out_path + ".history.csv";
  save_history_csv(result.history, history_path);
  std::printf("trained %zu epochs; best validation NLL %.6f at epoch %d\n",
              result.history.size(), result.best_valid_nll, result.best_epoch);
  std::printf("checkpoint: %s\nhistory: %s\n", out_path.c_str(), history_path.c_str());
  return 0;
}

int run_evaluate(const std::string& data_path, const std::string& ckpt_path,
                 const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Inf2vecModel model = make_model(ckpt);
  Dataset data = load_jsonl(data_path, ckpt.config.K);
  require(data.total_events() > 0, cat("no events in '", data_path, "'"));

  nlohmann::json report;
  report["nll"] = evaluate_nll(model, data);
  if (ckpt.config.decoder == DecoderKind::density) {
    auto records = predict_dataset(model, data);
    report["f1"] = weighted_f1(records);
    report["mae"] = mae(records);
  }
  std::ofstream out(out_path);
  require(out.good(), cat("cannot write '", out_path, "'"));
  out << report.dump(2) << "\n";
  std::printf("%s\n", report.dump().c_str());
  return 0;
}

int run_influence(const std::string& ckpt_path, const std::string& out_prefix,
                  const std::string& truth_path, const std::string& reduction_name) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  InfluenceMatrix infl = influence_matrix(ckpt);
  heatmap_export(infl, out_prefix + ".csv", out_prefix + ".svg");
  std::printf("influence matrix (%dx%d): %s.csv, %s.svg\n", infl.K, infl.K,
              out_prefix.c_str(), out_prefix.c_str());
  if (!truth_path.empty()) {
    HawkesParams truth = load_params(truth_path);
    TruthReduction reduction = TruthReduction::alpha;
    if (reduction_name == "pca")
      reduction = TruthReduction::pca_alpha_beta;
    else
      require(reduction_name == "alpha",
              cat("unknown --truth-reduction '", reduction_name,
                  "' (expected alpha or pca)"));
    AlignmentReport rep = truth_alignment(infl, truth, reduction);
    std::string align_path = out_prefix + "_alignment.json";
    std::ofstream out(align_path);
    require(out.good(), cat("cannot write '", align_path, "'"));
    out << alignment_to_json(rep).dump(2) << "\n";
    std::printf("alignment: mean |Spearman| = %.4f (%s)\n", rep.mean_abs,
                align_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inf2vec: local-embedding temporal point process toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string sim_params, sim_preset, sim_out;
  int sim_num_seqs = 0;
  double sim_horizon = 0.0;
  uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "simulate a multivariate Hawkes dataset");
  sim->add_option("--params", sim_params, "Hawkes params JSON file");
  sim->add_option("--preset", sim_preset, "built-in config: haw5, haw9 or hawc9");
  sim->add_option("--num-seqs", sim_num_seqs, "number of sequences")->required();
  sim->add_option("--horizon", sim_horizon, "observation horizon T")->required();
  sim->add_option("--seed", sim_seed, "random seed")->required();
  sim->add_option("--out", sim_out, "output directory")->required();

  // split
  std::string split_dir, split_ratios = "0.6,0.2,0.2";
  uint64_t split_seed = 0;
  auto* spl = app.add_subcommand("split", "split data.jsonl into train/valid/test");
  spl->add_option("--data", split_dir, "dataset directory")->required();
  spl->add_option("--ratios", split_ratios, "comma-separated ratios (default 0.6,0.2,0.2)");
  spl->add_option("--seed", split_seed, "random seed")->required();

  // train
  std::string tr_dir, tr_model_cfg, tr_train_cfg, tr_out, tr_history;
  auto* tr = app.add_subcommand("train", "train by maximum likelihood");
  tr->add_option("--data", tr_dir, "dataset directory with train/valid.jsonl")->required();
  tr->add_option("--model-config", tr_model_cfg, "model config JSON")->required();
  tr->add_option("--train-config", tr_train_cfg, "train config JSON")->required();
  tr->add_option("--out", tr_out, "checkpoint output path")->required();
  tr->add_option("--history", tr_history, "history CSV path (default <out>.history.csv)");

  // evaluate
  std::string ev_data, ev_ckpt, ev_out;
  auto* ev = app.add_subcommand("evaluate", "report F1 / MAE / NLL on a dataset file");
  ev->add_option("--data", ev_data, "dataset JSONL file (e.g. test.jsonl)")->required();
  ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--out", ev_out, "report JSON path")->required();

  // influence
  std::string in_ckpt, in_prefix, in_truth, in_reduction = "alpha";
  auto* infl = app.add_subcommand("influence", "export the learned influence matrix");
  infl->add_option("--ckpt", in_ckpt, "local-mode checkpoint file")->required();
  infl->add_option("--out", in_prefix, "output prefix for .csv/.svg")->required();
  infl->add_option("--truth", in_truth, "ground-truth Hawkes params for alignment");
  infl->add_option("--truth-reduction", in_reduction,
                   "truth magnitude: alpha (default) or pca of [alpha, beta]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(sim_params, sim_preset, sim_num_seqs, sim_horizon, sim_seed,
                          sim_out);
    if (spl->parsed()) return run_split(split_dir, split_ratios, split_seed);
    if (tr->parsed())
      return run_train(tr_dir, tr_model_cfg, tr_train_cfg, tr_out, tr_history);
    if (ev->parsed()) return run_evaluate(ev_data, ev_ckpt, ev_out);
    if (infl->parsed()) return run_influence(in_ckpt, in_prefix, in_truth, in_reduction);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
