#include "nnlm/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nnlm {

using json = nlohmann::ordered_json;

std::string to_string(OptimizerChoice c) {
  switch (c) {
    case OptimizerChoice::lm: return "lm";
    case OptimizerChoice::adam: return "adam";
    case OptimizerChoice::sgdm: return "sgdm";
    case OptimizerChoice::rprop: return "rprop";
  }
  return "unknown";
}

OptimizerChoice optimizer_from_string(const std::string& name) {
  if (name == "lm") return OptimizerChoice::lm;
  if (name == "adam") return OptimizerChoice::adam;
  if (name == "sgdm") return OptimizerChoice::sgdm;
  if (name == "rprop") return OptimizerChoice::rprop;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string TrainRecipe::architecture() const {
  std::ostringstream out;
  out << (mode == NetMode::autoencoder ? "autoencoder[" : "dense[");
  for (std::size_t i = 0; i < hidden.size(); ++i)
    out << (i ? "," : "") << hidden[i];
  out << "]";
  return out.str();
}

std::string TrainRecipe::fingerprint() const {
  std::ostringstream out;
  out << "seed=" << seed << " optimizer=" << to_string(optimizer) << " arch="
      << architecture() << " epochs=" << epochs << " patience=" << patience
      << " val_fraction=" << val_fraction;
  return out.str();
}

namespace {

double default_lr(OptimizerChoice c) {
  return c == OptimizerChoice::sgdm ? 1e-2 : 1e-3;
}

GradKind grad_kind(OptimizerChoice c) {
  switch (c) {
    case OptimizerChoice::adam: return GradKind::adam;
    case OptimizerChoice::sgdm: return GradKind::sgdm;
    case OptimizerChoice::rprop: return GradKind::rprop;
    default: throw std::logic_error("grad_kind: not a gradient optimizer");
  }
}

TrainReport dispatch_train(Network& net, const Batch& batch, const TrainRecipe& recipe) {
  if (recipe.optimizer == OptimizerChoice::lm) {
    LMConfig cfg;
    cfg.max_epochs = recipe.epochs;
    cfg.patience = recipe.patience;
    cfg.val_fraction = recipe.val_fraction;
    cfg.seed = recipe.seed;
    cfg.loss = recipe.loss;
    return train_lm(net, batch, cfg);
  }
  GradConfig cfg;
  cfg.optimizer = grad_kind(recipe.optimizer);
  cfg.learning_rate = recipe.learning_rate > 0 ? recipe.learning_rate
                                               : default_lr(recipe.optimizer);
  cfg.batch_size = recipe.batch_size;
  cfg.loss = recipe.loss;
  cfg.max_epochs = recipe.epochs;
  cfg.patience = recipe.patience;
  cfg.val_fraction = recipe.val_fraction;
  cfg.seed = recipe.seed;
  return train_grad(net, batch, cfg);
}

int train_boundary_of(const EventSeries& series, int n_train_events) {
  if (n_train_events < 1 || n_train_events >= series.n_events())
    throw std::invalid_argument("train boundary: n_train_events out of range");
  return series.event_ends[n_train_events - 1] + 1;
}

}  // namespace

TrainedModel train_on_series(const EventSeries& series, const TrainRecipe& recipe) {
  series.validate();
  const int boundary = train_boundary_of(series, recipe.n_train_events);
  TrainedModel model;
  model.norm = fit_series_normalizer(series, boundary);
  model.n_train_events = recipe.n_train_events;
  model.window_stride = recipe.window_stride;
  model.fingerprint = recipe.fingerprint();
  EventSeries normed = normalize(series, model.norm);

  NetworkSpec spec;
  spec.hidden = recipe.hidden;
  spec.mode = recipe.mode;
  Batch batch;
  if (recipe.mode == NetMode::autoencoder) {
    spec.input_dim = spec.output_dim = recipe.window_width;
    batch.inputs = window(normed.output.head(boundary), recipe.window_width,
                          recipe.window_stride);
    batch.targets = batch.inputs;
  } else {
    spec.input_dim = spec.output_dim = 1;
    batch.inputs = normed.input.head(boundary);
    batch.targets = normed.output.head(boundary);
  }

  model.net = build_network(spec, recipe.seed);
  model.report = dispatch_train(model.net, batch, recipe);
  return model;
}

TrainReport train_on_batch(Network& net, const Batch& batch, const TrainRecipe& recipe) {
  return dispatch_train(net, batch, recipe);
}

ResidualSeries residuals_on_series(const TrainedModel& model, const EventSeries& series) {
  const int boundary = train_boundary_of(series, model.n_train_events);
  EventSeries normed = normalize(series, model.norm);
  if (model.net.spec.mode == NetMode::autoencoder)
    return autoencoder_residual_series(model.net, normed, model.window_stride, boundary);
  return residual_series(model.net, normed, boundary);
}

AnomalyReport detect_on_series(const TrainedModel& model, const EventSeries& series,
                               double ratio_threshold, ResidualSeries* residuals_out) {
  ResidualSeries res = residuals_on_series(model, series);
  AnomalyReport report = detect(res, ratio_threshold);
  report.model_fingerprint = model.fingerprint;
  if (residuals_out) *residuals_out = std::move(res);
  return report;
}

ConsensusReport consensus_on_series(const EventSeries& series, const TrainRecipe& base,
                                    int n_runs, double quorum, double ratio_threshold) {
  if (n_runs < 2) throw std::invalid_argument("consensus_on_series: need n_runs >= 2");
  std::vector<AnomalyReport> reports;
  reports.reserve(n_runs);
  for (int i = 0; i < n_runs; ++i) {
    TrainRecipe recipe = base;
    recipe.seed = base.seed + static_cast<std::uint64_t>(i);
    TrainedModel model = train_on_series(series, recipe);
    reports.push_back(detect_on_series(model, series, ratio_threshold));
  }
  return consensus(reports, quorum);
}

namespace {

int scaled(int epochs, double scale) {
  return std::max(1, static_cast<int>(epochs * scale));
}

BenchResult bench_batch_run(const std::string& scenario, const Batch& batch,
                            const TrainRecipe& recipe) {
  NetworkSpec spec;
  spec.input_dim = static_cast<int>(batch.inputs.cols());
  spec.output_dim = static_cast<int>(batch.targets.cols());
  spec.hidden = recipe.hidden;
  Network net = build_network(spec, recipe.seed);
  TrainReport report = train_on_batch(net, batch, recipe);
  BenchResult row;
  row.scenario = scenario;
  row.optimizer = to_string(recipe.optimizer);
  row.architecture = recipe.architecture();
  row.param_count = net.param_count();
  row.seed = recipe.seed;
  row.epochs_run = static_cast<int>(report.epoch_history.size());
  row.final_train_loss = batch_loss(net, batch, LossKind::mse);
  row.best_val_loss = report.best_val_loss;
  row.wall_time = report.wall_time;
  return row;
}

BenchResult bench_series_run(const std::string& scenario, const EventSeries& series,
                             const TrainRecipe& recipe) {
  TrainedModel model = train_on_series(series, recipe);
  AnomalyReport anomalies = detect_on_series(model, series, 2.0);
  BenchResult row;
  row.scenario = scenario;
  row.optimizer = to_string(recipe.optimizer);
  row.architecture = recipe.architecture();
  row.param_count = model.net.param_count();
  row.seed = recipe.seed;
  row.epochs_run = static_cast<int>(model.report.epoch_history.size());
  row.final_train_loss = model.report.final_train_loss;
  row.best_val_loss = model.report.best_val_loss;
  row.wall_time = model.report.wall_time;
  row.train_max = anomalies.train_max;
  for (const auto& e : anomalies.per_event)
    if (e.event >= recipe.n_train_events)
      row.max_anomaly_ratio = std::max(row.max_anomaly_ratio, e.ratio);
  std::ostringstream flags;
  for (int e : anomalies.flagged_events) flags << (flags.tellp() > 0 ? " " : "") << e;
  row.flagged_events = flags.str();
  return row;
}

}  // namespace

std::vector<BenchResult> run_bench(const std::string& scenario, const BenchOptions& opts) {
  std::vector<BenchResult> rows;
  if (scenario == "sinc") {
    const Batch batch = gen_sinc();
    for (std::uint64_t seed : opts.seeds) {
      TrainRecipe lm;
      lm.hidden = {20};
      lm.optimizer = OptimizerChoice::lm;
      lm.epochs = scaled(100, opts.epoch_scale);
      lm.patience = 0;
      lm.seed = seed;
      rows.push_back(bench_batch_run(scenario, batch, lm));
      TrainRecipe adam = lm;
      adam.optimizer = OptimizerChoice::adam;
      rows.push_back(bench_batch_run(scenario, batch, adam));
    }
  } else if (scenario == "engine") {
    GenConfig gen;
    gen.seed = opts.data_seed;
    const EventSeries series = gen_engine_like(gen);
    for (std::uint64_t seed : opts.seeds) {
      TrainRecipe lm;
      lm.hidden = {40};
      lm.optimizer = OptimizerChoice::lm;
      lm.epochs = scaled(300, opts.epoch_scale);
      lm.patience = 3;
      lm.seed = seed;
      rows.push_back(bench_series_run(scenario, series, lm));
      TrainRecipe adam = lm;
      adam.optimizer = OptimizerChoice::adam;
      rows.push_back(bench_series_run(scenario, series, adam));
      TrainRecipe rprop;
      rprop.hidden = {100, 50, 25};
      rprop.optimizer = OptimizerChoice::rprop;
      rprop.epochs = scaled(1000, opts.epoch_scale);
      rprop.patience = 10;
      rprop.seed = seed;
      rows.push_back(bench_series_run(scenario, series, rprop));
    }
  } else if (scenario == "autoencoder") {
    GenConfig gen;
    gen.seed = opts.data_seed;
    const EventSeries series = gen_engine_like(gen);
    for (std::uint64_t seed : opts.seeds) {
      TrainRecipe lm;
      lm.hidden = {10};
      lm.mode = NetMode::autoencoder;
      lm.optimizer = OptimizerChoice::lm;
      lm.loss = LossKind::mae;
      lm.epochs = scaled(50, opts.epoch_scale);
      lm.patience = 0;
      lm.seed = seed;
      rows.push_back(bench_series_run(scenario, series, lm));
      TrainRecipe adam_small = lm;
      adam_small.optimizer = OptimizerChoice::adam;
      rows.push_back(bench_series_run(scenario, series, adam_small));
      TrainRecipe adam_big = adam_small;
      adam_big.hidden = {512};
      adam_big.epochs = scaled(500, opts.epoch_scale);
      rows.push_back(bench_series_run(scenario, series, adam_big));
    }
  } else {
    throw std::invalid_argument("unknown bench scenario: " + scenario);
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchResult>& rows, std::ostream& out) {
  out << "# nnlm-bench-csv v1\n";
  out << "scenario,optimizer,architecture,param_count,seed,epochs_run,"
         "final_train_loss,best_val_loss,wall_time,train_max,max_anomaly_ratio,"
         "flagged_events\n";
  for (const auto& r : rows) {
    out << r.scenario << "," << r.optimizer << "," << r.architecture << ","
        << r.param_count << "," << r.seed << "," << r.epochs_run << ","
        << r.final_train_loss << "," << r.best_val_loss << "," << r.wall_time << ","
        << r.train_max << "," << r.max_anomaly_ratio << "," << r.flagged_events
        << "\n";
  }
}

void save_train_report(const TrainReport& report, std::ostream& out) {
  json j;
  j["schema"] = "nnlm-train-report v1";
  j["stop_reason"] = to_string(report.stop_reason);
  j["best_epoch"] = report.best_epoch;
  j["best_val_loss"] = report.best_val_loss;
  j["final_train_loss"] = report.final_train_loss;
  j["wall_time"] = report.wall_time;
  j["epoch_history"] = json::array();
  for (const auto& e : report.epoch_history)
    j["epoch_history"].push_back({{"epoch", e.epoch},
                                  {"train_loss", e.train_loss},
                                  {"val_loss", e.val_loss},
                                  {"step_scale", e.step_scale},
                                  {"accepted", e.accepted}});
  j["best_params"] = std::vector<double>(report.best_params.data(),
                                         report.best_params.data() +
                                             report.best_params.size());
  out << j.dump(2) << "\n";
}

}  // namespace nnlm
