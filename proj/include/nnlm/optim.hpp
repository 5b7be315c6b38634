#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nnlm/network.hpp"

namespace nnlm {

/// Non-finite loss, gradient or residuals during training.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StopReason { max_epochs, patience_exhausted, lambda_overflow, converged };

std::string to_string(StopReason r);

struct LMConfig {
  double lambda0 = 1e-3;
  double lambda_inc = 10.0;
  double lambda_dec = 0.1;
  double lambda_max = 1e10;
  int max_epochs = 300;
  double val_fraction = 0.4;
  int patience = 3;
  bool resplit_each_epoch = true;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;  // monitoring loss; LM itself minimizes SSE
  int block_rows = 4096;          // row-block size for J^T J accumulation

  void validate() const;
};

enum class GradKind { adam, sgdm, rprop };

struct GradConfig {
  GradKind optimizer = GradKind::adam;
  double learning_rate = 1e-3;  // sgdm conventionally 1e-2
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double rprop_eta_plus = 1.2;
  double rprop_eta_minus = 0.5;
  double rprop_delta0 = 0.07;
  double rprop_delta_max = 50.0;
  int batch_size = 0;  // 0 = full batch; rprop is always full batch
  LossKind loss = LossKind::mse;
  int max_epochs = 300;
  double val_fraction = 0.4;
  int patience = 3;
  bool resplit_each_epoch = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  double val_loss;
  double step_scale;  // lambda after the epoch (LM) or learning rate / mean rprop step
  bool accepted;
  double train_sse_before;  // SSE on this epoch's train subset, LM only
  double train_sse_after;
};

struct TrainReport {
  std::vector<EpochRecord> epoch_history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  double final_train_loss = 0.0;
  StopReason stop_reason = StopReason::max_epochs;
  double wall_time = 0.0;
  Vector best_params;
};

/// Disjoint exhaustive split, |val| = round(val_fraction * n).
std::pair<std::vector<int>, std::vector<int>> split_train_val(int n_samples,
                                                              double val_fraction,
                                                              std::mt19937_64& rng);

struct LmStepResult {
  bool ok = false;  // factorization failed -> caller raises lambda and retries
  Vector delta;
};

/// Solves (J^T J + lambda I) delta = J^T r by Cholesky, J^T J accumulated
/// in row blocks.
LmStepResult lm_step(const Matrix& jac, const Vector& residual, double lambda,
                     int block_rows = 4096);

/// Damped Gauss-Newton epoch loop with per-epoch random splitting, accept/
/// reject damping schedule and patience-based early stopping. Minimizes the
/// sum of squared residuals; config.loss is only monitored. The network is
/// left at best_params.
TrainReport train_lm(Network& net, const Batch& batch, const LMConfig& config);

/// First-order trainers (ADAM, SGD+momentum, Rprop) with the same split /
/// patience / best-params machinery as train_lm.
TrainReport train_grad(Network& net, const Batch& batch, const GradConfig& config);

enum class StopDecision { keep_going, stop };

/// Stop iff the last `patience` epochs each failed to improve on the running
/// best; patience 0 disables early stopping.
StopDecision early_stop_check(const std::vector<double>& val_history, int patience);

}  // namespace nnlm
