// Command-line front end: data generation, training, anomaly detection,
// multi-seed consensus and the optimizer benchmark suite.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnlm/anomaly.hpp"
#include "nnlm/network.hpp"
#include "nnlm/optim.hpp"
#include "nnlm/pipeline.hpp"
#include "nnlm/timeseries.hpp"

namespace fs = std::filesystem;
using namespace nnlm;

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

struct GlobalOpts {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

std::uint64_t effective_seed(const GlobalOpts& g) {
  if (g.seed_given) return g.seed;
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  return drawn;
}

fs::path out_path(const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

struct TrainFlags {
  std::string hidden = "40";
  std::string optimizer = "lm";
  std::string mode = "regressor";
  std::string loss = "mse";
  int epochs = 300;
  int patience = 3;
  double val_fraction = 0.4;
  double learning_rate = 0.0;
  int batch_size = 0;
  int train_events = 15;
  int window_width = 32;
  int window_stride = 8;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--hidden", f.hidden, "hidden layer sizes, comma separated");
  cmd->add_option("--optimizer", f.optimizer, "lm|adam|sgdm|rprop");
  cmd->add_option("--mode", f.mode, "regressor|autoencoder");
  cmd->add_option("--loss", f.loss, "monitoring loss, mse|mae");
  cmd->add_option("--epochs", f.epochs, "maximum training epochs");
  cmd->add_option("--patience", f.patience, "validation tolerance in epochs, 0 disables");
  cmd->add_option("--val-fraction", f.val_fraction, "validation fraction of the split");
  cmd->add_option("--lr", f.learning_rate, "learning rate (0 = optimizer default)");
  cmd->add_option("--batch-size", f.batch_size, "minibatch size, 0 = full batch");
  cmd->add_option("--train-events", f.train_events, "events used for training/validation");
  cmd->add_option("--window-width", f.window_width, "autoencoder window width");
  cmd->add_option("--window-stride", f.window_stride, "autoencoder window stride");
}

TrainRecipe to_recipe(const TrainFlags& f, std::uint64_t seed) {
  TrainRecipe recipe;
  recipe.hidden = parse_int_list(f.hidden);
  recipe.optimizer = optimizer_from_string(f.optimizer);
  if (f.mode == "autoencoder")
    recipe.mode = NetMode::autoencoder;
  else if (f.mode != "regressor")
    throw std::invalid_argument("unknown mode: " + f.mode);
  if (f.loss == "mae")
    recipe.loss = LossKind::mae;
  else if (f.loss != "mse")
    throw std::invalid_argument("unknown loss: " + f.loss);
  recipe.epochs = f.epochs;
  recipe.patience = f.patience;
  recipe.val_fraction = f.val_fraction;
  recipe.learning_rate = f.learning_rate;
  recipe.batch_size = f.batch_size;
  recipe.n_train_events = f.train_events;
  recipe.window_width = f.window_width;
  recipe.window_stride = f.window_stride;
  recipe.seed = seed;
  return recipe;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& emit) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path.string());
  emit(out);
}

int run(int argc, char** argv) {
  CLI::App app{"dense-net function approximation, LM training and residual "
               "anomaly detection"};
  app.require_subcommand(1);
  GlobalOpts global;
  auto* seed_opt = app.add_option("--seed", global.seed, "RNG seed; drawn and printed if omitted");
  app.add_option("--out-dir", global.out_dir, "directory for emitted files");
  app.set_config("--config");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic series CSV");
  std::string preset = "engine";
  std::string gen_out;
  GenConfig gen_cfg;
  int sinc_points = 100;
  double sinc_half_range = 4.0;
  std::string anomaly_events_flag;
  gen->add_option("--preset", preset, "engine|sinc");
  gen->add_option("--out", gen_out, "output CSV path (default <out-dir>/<preset>.csv)");
  gen->add_option("--events", gen_cfg.n_events, "number of events");
  gen->add_option("--samples-per-event", gen_cfg.samples_per_event, "samples per event");
  gen->add_option("--anomaly-gain", gen_cfg.anomaly_gain, "output gain on anomaly events");
  gen->add_option("--failure-spike", gen_cfg.failure_spike, "spike amplitude in the final event");
  gen->add_option("--jump-rate", gen_cfg.jump_rate, "abrupt level shifts per event");
  gen->add_option("--anomaly-events", anomaly_events_flag,
                  "anomalous event indices, comma separated");
  gen->add_option("--points", sinc_points, "sinc sample count");
  gen->add_option("--half-range", sinc_half_range, "sinc half range");

  // train
  auto* train = app.add_subcommand("train", "train a model on a series CSV");
  std::string train_data, model_out, report_out;
  TrainFlags train_flags;
  train->add_option("--data", train_data, "input series CSV")->required();
  train->add_option("--model-out", model_out, "model file path");
  train->add_option("--report-out", report_out, "train report path");
  add_train_flags(train, train_flags);

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "score residuals of a trained model");
  std::string det_model, det_data, det_report, det_residuals;
  double det_threshold = 2.0;
  int det_train_events = 15;
  int det_window_stride = 8;
  detect_cmd->add_option("--model", det_model, "model file")->required();
  detect_cmd->add_option("--data", det_data, "series CSV")->required();
  detect_cmd->add_option("--threshold", det_threshold, "anomaly ratio threshold");
  detect_cmd->add_option("--train-events", det_train_events,
                         "events forming the training region");
  detect_cmd->add_option("--window-stride", det_window_stride,
                         "stride for autoencoder models");
  detect_cmd->add_option("--report-out", det_report, "anomaly report path");
  detect_cmd->add_option("--residuals-out", det_residuals, "per-sample residual CSV path");

  // consensus
  auto* cons = app.add_subcommand("consensus", "multi-seed train+detect consensus");
  std::string cons_data, cons_report;
  int cons_k = 5;
  double cons_quorum = 0.8;
  double cons_threshold = 2.0;
  TrainFlags cons_flags;
  cons->add_option("--data", cons_data, "input series CSV")->required();
  cons->add_option("-k,--runs", cons_k, "number of independently seeded runs");
  cons->add_option("--quorum", cons_quorum, "fraction of runs required for consensus");
  cons->add_option("--threshold", cons_threshold, "anomaly ratio threshold");
  cons->add_option("--report-out", cons_report, "consensus report path");
  add_train_flags(cons, cons_flags);

  // bench
  auto* bench = app.add_subcommand("bench", "optimizer comparison suite");
  std::string bench_scenario = "sinc";
  std::string bench_seeds = "1,2,3,4,5";
  std::string bench_out;
  BenchOptions bench_opts;
  bench->add_option("--scenario", bench_scenario, "sinc|engine|autoencoder|all");
  bench->add_option("--seeds", bench_seeds, "model seeds, comma separated");
  bench->add_option("--data-seed", bench_opts.data_seed, "generator seed");
  bench->add_option("--epoch-scale", bench_opts.epoch_scale,
                    "scale factor on every epoch budget");
  bench->add_option("--out", bench_out, "bench CSV path");

  CLI11_PARSE(app, argc, argv);
  global.seed_given = seed_opt->count() > 0;
  const std::uint64_t seed = effective_seed(global);
  std::cout << "seed " << seed << "\n";

  if (gen->parsed()) {
    gen_cfg.seed = seed;
    if (!anomaly_events_flag.empty())
      gen_cfg.anomaly_events = parse_int_list(anomaly_events_flag);
    EventSeries series;
    if (preset == "engine") {
      series = gen_engine_like(gen_cfg);
    } else if (preset == "sinc") {
      Batch batch = gen_sinc(sinc_points, sinc_half_range);
      series.input = batch.inputs.col(0);
      series.output = batch.targets.col(0);
      series.event_ends = {sinc_points - 1};
      series.name = "sinc";
    } else {
      throw std::invalid_argument("unknown preset: " + preset);
    }
    const fs::path path = gen_out.empty() ? out_path(global, preset + ".csv")
                                          : fs::path(gen_out);
    save_series_csv(series, path.string());
    std::cout << "wrote " << path.string() << " (" << series.size() << " rows, "
              << series.n_events() << " events)\n";
  } else if (train->parsed()) {
    const EventSeries series = load_series_csv(train_data);
    const TrainRecipe recipe = to_recipe(train_flags, seed);
    TrainedModel model = train_on_series(series, recipe);
    const fs::path model_path =
        model_out.empty() ? out_path(global, "model.txt") : fs::path(model_out);
    save_model(model.net, model_path.string());
    const fs::path report_path =
        report_out.empty() ? out_path(global, "train_report.json") : fs::path(report_out);
    write_file(report_path, [&](std::ostream& o) { save_train_report(model.report, o); });
    std::cout << "stop_reason " << to_string(model.report.stop_reason) << "\n"
              << "best_epoch " << model.report.best_epoch << "\n"
              << "best_val_loss " << model.report.best_val_loss << "\n"
              << "final_train_loss " << model.report.final_train_loss << "\n"
              << "wrote " << model_path.string() << " " << report_path.string() << "\n";
  } else if (detect_cmd->parsed()) {
    const EventSeries series = load_series_csv(det_data);
    TrainedModel model;
    model.net = load_model(det_model);
    model.n_train_events = det_train_events;
    model.window_stride = det_window_stride;
    const int boundary = series.event_ends.at(det_train_events - 1) + 1;
    model.norm = fit_series_normalizer(series, boundary);
    model.fingerprint = "model=" + det_model;
    ResidualSeries residuals;
    AnomalyReport report = detect_on_series(model, series, det_threshold, &residuals);
    const fs::path report_path =
        det_report.empty() ? out_path(global, "anomaly_report.json") : fs::path(det_report);
    write_file(report_path, [&](std::ostream& o) { save_anomaly_report(report, o); });
    const fs::path res_path = det_residuals.empty() ? out_path(global, "residuals.csv")
                                                    : fs::path(det_residuals);
    write_file(res_path, [&](std::ostream& o) { save_residual_csv(residuals, o); });
    std::cout << "train_max " << report.train_max << "\nflagged";
    for (int e : report.flagged_events) std::cout << " " << e;
    std::cout << "\nwrote " << report_path.string() << " " << res_path.string() << "\n";
  } else if (cons->parsed()) {
    const EventSeries series = load_series_csv(cons_data);
    TrainRecipe base = to_recipe(cons_flags, seed);
    ConsensusReport report =
        consensus_on_series(series, base, cons_k, cons_quorum, cons_threshold);
    const fs::path report_path = cons_report.empty()
                                     ? out_path(global, "consensus_report.json")
                                     : fs::path(cons_report);
    write_file(report_path, [&](std::ostream& o) { save_consensus_report(report, o); });
    std::cout << "consensus";
    for (int e : report.consensus_events) std::cout << " " << e;
    std::cout << "\nartefacts";
    for (int e : report.artefact_events) std::cout << " " << e;
    std::cout << "\nwrote " << report_path.string() << "\n";
  } else if (bench->parsed()) {
    std::vector<std::string> scenarios;
    if (bench_scenario == "all")
      scenarios = {"sinc", "engine", "autoencoder"};
    else
      scenarios = {bench_scenario};
    bench_opts.seeds.clear();
    for (int s : parse_int_list(bench_seeds))
      bench_opts.seeds.push_back(static_cast<std::uint64_t>(s));
    std::vector<BenchResult> rows;
    for (const auto& sc : scenarios) {
      auto part = run_bench(sc, bench_opts);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const fs::path path =
        bench_out.empty() ? out_path(global, "bench.csv") : fs::path(bench_out);
    write_file(path, [&](std::ostream& o) { write_bench_csv(rows, o); });
    for (const auto& r : rows)
      std::cout << r.scenario << " " << r.optimizer << " " << r.architecture
                << " seed=" << r.seed << " train_loss=" << r.final_train_loss
                << " max_ratio=" << r.max_anomaly_ratio << " flagged=["
                << r.flagged_events << "]\n";
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}
