#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnlm/anomaly.hpp"
#include "nnlm/network.hpp"
#include "nnlm/optim.hpp"
#include "nnlm/timeseries.hpp"

namespace nnlm {

enum class OptimizerChoice { lm, adam, sgdm, rprop };

std::string to_string(OptimizerChoice c);
OptimizerChoice optimizer_from_string(const std::string& name);

/// One end-to-end training run on an event series: normalize on the training
/// events, train on them (windowed for autoencoders), monitor per the
/// configured loss.
struct TrainRecipe {
  std::vector<int> hidden = {40};
  NetMode mode = NetMode::regressor;
  OptimizerChoice optimizer = OptimizerChoice::lm;
  int epochs = 300;
  int patience = 3;
  double val_fraction = 0.4;
  LossKind loss = LossKind::mse;
  double learning_rate = 0.0;  // 0 = per-optimizer default
  int batch_size = 0;          // 0 = full batch
  int n_train_events = 15;
  int window_width = 32;
  int window_stride = 8;
  std::uint64_t seed = 0;

  std::string architecture() const;
  std::string fingerprint() const;
};

struct TrainedModel {
  Network net;
  SeriesNormalizer norm;
  TrainReport report;
  int n_train_events = 0;
  int window_stride = 8;
  std::string fingerprint;
};

TrainedModel train_on_series(const EventSeries& series, const TrainRecipe& recipe);

/// Training on a plain batch (the sinc experiments): no normalization, no
/// event structure.
TrainReport train_on_batch(Network& net, const Batch& batch, const TrainRecipe& recipe);

ResidualSeries residuals_on_series(const TrainedModel& model, const EventSeries& series);

AnomalyReport detect_on_series(const TrainedModel& model, const EventSeries& series,
                               double ratio_threshold,
                               ResidualSeries* residuals_out = nullptr);

ConsensusReport consensus_on_series(const EventSeries& series, const TrainRecipe& base,
                                    int n_runs, double quorum, double ratio_threshold);

struct BenchResult {
  std::string scenario;
  std::string optimizer;
  std::string architecture;
  int param_count = 0;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
  double wall_time = 0.0;
  double train_max = 0.0;       // 0 when the scenario has no anomaly stage
  double max_anomaly_ratio = 0.0;
  std::string flagged_events;   // space separated
};

struct BenchOptions {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t data_seed = 7;
  double epoch_scale = 1.0;  // < 1 shrinks every budget (smoke tests)
};

/// Scenario names: "sinc", "engine", "autoencoder".
std::vector<BenchResult> run_bench(const std::string& scenario, const BenchOptions& opts);

void write_bench_csv(const std::vector<BenchResult>& rows, std::ostream& out);

void save_train_report(const TrainReport& report, std::ostream& out);

}  // namespace nnlm
