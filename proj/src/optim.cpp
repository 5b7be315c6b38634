#include "nnlm/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nnlm {

namespace {

constexpr double kLambdaFloor = 1e-20;
constexpr double kSseTol = 1e-14;
constexpr double kGradTol = 1e-12;
constexpr double kRpropStepFloor = 1e-9;

Batch subset(const Batch& batch, const std::vector<int>& idx) {
  Batch out;
  out.inputs.resize(static_cast<Eigen::Index>(idx.size()), batch.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(idx.size()), batch.targets.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = batch.inputs.row(idx[i]);
    out.targets.row(static_cast<Eigen::Index>(i)) = batch.targets.row(idx[i]);
  }
  return out;
}

// residuals stacked sample-major, then output-dimension (matches jacobian rows)
Vector stacked_residual(const Network& net, const Batch& batch) {
  Matrix r = batch.targets - forward(net, batch.inputs);
  return r.transpose().reshaped();
}

double sse_at(const Network& net, const Batch& batch) {
  return (batch.targets - forward(net, batch.inputs)).squaredNorm();
}

class Timer {
 public:
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

}  // namespace

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::patience_exhausted: return "patience_exhausted";
    case StopReason::lambda_overflow: return "lambda_overflow";
    case StopReason::converged: return "converged";
  }
  return "unknown";
}

void LMConfig::validate() const {
  if (lambda0 <= 0 || lambda0 > lambda_max)
    throw std::invalid_argument("LMConfig: need 0 < lambda0 <= lambda_max");
  if (lambda_inc <= 1.0 || lambda_dec <= 0.0 || lambda_dec >= 1.0)
    throw std::invalid_argument("LMConfig: need lambda_inc > 1 > lambda_dec > 0");
  if (max_epochs < 1) throw std::invalid_argument("LMConfig: max_epochs must be >= 1");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("LMConfig: val_fraction must be in (0,1)");
  if (patience < 0) throw std::invalid_argument("LMConfig: patience must be >= 0");
  if (block_rows < 1) throw std::invalid_argument("LMConfig: block_rows must be >= 1");
}

void GradConfig::validate() const {
  if (learning_rate <= 0) throw std::invalid_argument("GradConfig: learning_rate must be > 0");
  if (momentum < 0 || momentum >= 1)
    throw std::invalid_argument("GradConfig: momentum must be in [0,1)");
  if (rprop_eta_minus >= 1.0 || rprop_eta_plus <= 1.0)
    throw std::invalid_argument("GradConfig: need rprop_eta_minus < 1 < rprop_eta_plus");
  if (max_epochs < 1) throw std::invalid_argument("GradConfig: max_epochs must be >= 1");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("GradConfig: val_fraction must be in (0,1)");
  if (patience < 0) throw std::invalid_argument("GradConfig: patience must be >= 0");
  if (batch_size < 0) throw std::invalid_argument("GradConfig: batch_size must be >= 0");
}

std::pair<std::vector<int>, std::vector<int>> split_train_val(int n_samples,
                                                              double val_fraction,
                                                              std::mt19937_64& rng) {
  if (n_samples < 2) throw std::invalid_argument("split_train_val: need n_samples >= 2");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("split_train_val: val_fraction must be in (0,1)");
  const int n_val = static_cast<int>(std::llround(val_fraction * n_samples));
  if (n_val == 0 || n_val == n_samples)
    throw std::invalid_argument("split_train_val: split leaves one side empty");
  std::vector<int> perm(n_samples);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> train(perm.begin(), perm.end() - n_val);
  std::vector<int> val(perm.end() - n_val, perm.end());
  return {std::move(train), std::move(val)};
}

LmStepResult lm_step(const Matrix& jac, const Vector& residual, double lambda,
                     int block_rows) {
  if (jac.rows() != residual.size())
    throw std::invalid_argument("lm_step: residual length must equal Jacobian row count");
  if (lambda < 0) throw std::invalid_argument("lm_step: lambda must be >= 0");
  if (!jac.allFinite() || !residual.allFinite())
    throw std::invalid_argument("lm_step: non-finite entries in J or r");

  const Eigen::Index p = jac.cols();
  Matrix normal = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  for (Eigen::Index r0 = 0; r0 < jac.rows(); r0 += block_rows) {
    const Eigen::Index nb = std::min<Eigen::Index>(block_rows, jac.rows() - r0);
    auto block = jac.middleRows(r0, nb);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    rhs.noalias() += block.transpose() * residual.segment(r0, nb);
  }
  normal.triangularView<Eigen::StrictlyUpper>() =
      normal.triangularView<Eigen::StrictlyLower>().transpose();
  normal.diagonal().array() += lambda;

  Eigen::LLT<Matrix> llt(normal);
  LmStepResult res;
  if (llt.info() != Eigen::Success) return res;
  res.delta = llt.solve(rhs);
  if (!res.delta.allFinite()) return res;
  res.ok = true;
  return res;
}

StopDecision early_stop_check(const std::vector<double>& val_history, int patience) {
  if (val_history.empty())
    throw std::invalid_argument("early_stop_check: empty history");
  if (patience == 0) return StopDecision::keep_going;
  double best = val_history.front();
  std::size_t last_improvement = 0;
  for (std::size_t i = 1; i < val_history.size(); ++i) {
    if (val_history[i] < best) {
      best = val_history[i];
      last_improvement = i;
    }
  }
  const std::size_t trailing = val_history.size() - 1 - last_improvement;
  return trailing >= static_cast<std::size_t>(patience) ? StopDecision::stop
                                                        : StopDecision::keep_going;
}

namespace {

// shared epoch bookkeeping for both trainers
struct EpochTracker {
  std::vector<EpochRecord> history;
  std::vector<double> val_history;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  Vector best_params;

  void record(const EpochRecord& rec, const Vector& params) {
    history.push_back(rec);
    val_history.push_back(rec.val_loss);
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best_epoch = rec.epoch;
      best_params = params;
    }
  }

  TrainReport finish(Network& net, const Batch& full, LossKind loss,
                     StopReason reason, double wall) {
    TrainReport report;
    if (best_epoch >= 0) net.params = best_params;
    report.epoch_history = std::move(history);
    report.best_epoch = best_epoch;
    report.best_val_loss = best_val;
    report.final_train_loss = batch_loss(net, full, loss);
    report.stop_reason = reason;
    report.wall_time = wall;
    report.best_params = net.params;
    return report;
  }
};

}  // namespace

TrainReport train_lm(Network& net, const Batch& batch, const LMConfig& config) {
  config.validate();
  batch.validate();
  Timer timer;
  std::mt19937_64 rng(config.seed);
  double lambda = config.lambda0;
  EpochTracker tracker;
  StopReason reason = StopReason::max_epochs;

  auto split = split_train_val(batch.size(), config.val_fraction, rng);
  Batch train = subset(batch, split.first);
  Batch val = subset(batch, split.second);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (config.resplit_each_epoch && epoch > 0) {
      split = split_train_val(batch.size(), config.val_fraction, rng);
      train = subset(batch, split.first);
      val = subset(batch, split.second);
    }

    Vector r = stacked_residual(net, train);
    if (!r.allFinite()) throw NumericalError("train_lm: non-finite residuals");
    const double sse = r.squaredNorm();
    Matrix jac = jacobian(net, train.inputs);
    const double grad_norm = (jac.transpose() * r).norm();

    if (sse < kSseTol || grad_norm < kGradTol) {
      tracker.record({epoch, batch_loss(net, train, config.loss),
                      batch_loss(net, val, config.loss), lambda, false, sse, sse},
                     net.params);
      reason = StopReason::converged;
      break;
    }

    bool accepted = false;
    double sse_after = sse;
    while (true) {
      LmStepResult step = lm_step(jac, r, lambda, config.block_rows);
      if (step.ok) {
        Network candidate = net;
        candidate.params += step.delta;
        const double sse_new = sse_at(candidate, train);
        if (std::isfinite(sse_new) && sse_new < sse) {
          net.params = candidate.params;
          lambda = std::max(lambda * config.lambda_dec, kLambdaFloor);
          accepted = true;
          sse_after = sse_new;
          break;
        }
      }
      if (lambda * config.lambda_inc > config.lambda_max) {
        reason = StopReason::lambda_overflow;
        break;
      }
      lambda *= config.lambda_inc;
    }

    const double train_loss = batch_loss(net, train, config.loss);
    const double val_loss = batch_loss(net, val, config.loss);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("train_lm: non-finite loss");
    tracker.record({epoch, train_loss, val_loss, lambda, accepted, sse, sse_after},
                   net.params);

    if (reason == StopReason::lambda_overflow) break;
    if (early_stop_check(tracker.val_history, config.patience) == StopDecision::stop) {
      reason = StopReason::patience_exhausted;
      break;
    }
  }

  return tracker.finish(net, batch, config.loss, reason, timer.elapsed());
}

TrainReport train_grad(Network& net, const Batch& batch, const GradConfig& config) {
  config.validate();
  batch.validate();
  Timer timer;
  std::mt19937_64 rng(config.seed);
  EpochTracker tracker;
  StopReason reason = StopReason::max_epochs;

  const int p = net.param_count();
  Vector adam_m = Vector::Zero(p);
  Vector adam_v = Vector::Zero(p);
  Vector velocity = Vector::Zero(p);
  Vector rprop_step = Vector::Constant(p, config.rprop_delta0);
  Vector prev_grad = Vector::Zero(p);
  long adam_t = 0;

  auto split = split_train_val(batch.size(), config.val_fraction, rng);
  Batch train = subset(batch, split.first);
  Batch val = subset(batch, split.second);

  const bool full_batch = config.optimizer == GradKind::rprop || config.batch_size == 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (config.resplit_each_epoch && epoch > 0) {
      split = split_train_val(batch.size(), config.val_fraction, rng);
      train = subset(batch, split.first);
      val = subset(batch, split.second);
    }

    std::vector<std::vector<int>> minibatches;
    if (full_batch) {
      std::vector<int> all(train.size());
      std::iota(all.begin(), all.end(), 0);
      minibatches.push_back(std::move(all));
    } else {
      std::vector<int> order(train.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < order.size(); i += config.batch_size) {
        const std::size_t end = std::min(order.size(), i + config.batch_size);
        minibatches.emplace_back(order.begin() + i, order.begin() + end);
      }
    }

    for (const auto& mb : minibatches) {
      Batch part = full_batch ? train : subset(train, mb);
      Vector g = loss_gradient(net, part, config.loss);
      if (!g.allFinite()) throw NumericalError("train_grad: non-finite gradient");
      switch (config.optimizer) {
        case GradKind::adam: {
          ++adam_t;
          adam_m = config.beta1 * adam_m + (1.0 - config.beta1) * g;
          adam_v = config.beta2 * adam_v + (1.0 - config.beta2) * g.cwiseProduct(g);
          const double c1 = 1.0 - std::pow(config.beta1, adam_t);
          const double c2 = 1.0 - std::pow(config.beta2, adam_t);
          net.params.array() -= config.learning_rate * (adam_m.array() / c1) /
                                ((adam_v.array() / c2).sqrt() + config.epsilon);
          break;
        }
        case GradKind::sgdm: {
          velocity = config.momentum * velocity - config.learning_rate * g;
          net.params += velocity;
          break;
        }
        case GradKind::rprop: {
          for (int j = 0; j < p; ++j) {
            const double s = prev_grad(j) * g(j);
            if (s > 0.0) {
              rprop_step(j) = std::min(rprop_step(j) * config.rprop_eta_plus,
                                       config.rprop_delta_max);
              net.params(j) -= (g(j) > 0 ? 1.0 : -1.0) * rprop_step(j);
              prev_grad(j) = g(j);
            } else if (s < 0.0) {
              // sign flip: shrink, skip the update this round
              rprop_step(j) = std::max(rprop_step(j) * config.rprop_eta_minus,
                                       kRpropStepFloor);
              prev_grad(j) = 0.0;
            } else {
              if (g(j) > 0.0)
                net.params(j) -= rprop_step(j);
              else if (g(j) < 0.0)
                net.params(j) += rprop_step(j);
              prev_grad(j) = g(j);
            }
          }
          break;
        }
      }
    }

    const double train_loss = batch_loss(net, train, config.loss);
    const double val_loss = batch_loss(net, val, config.loss);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("train_grad: non-finite loss");
    const double step_scale = config.optimizer == GradKind::rprop
                                  ? rprop_step.mean()
                                  : config.learning_rate;
    tracker.record({epoch, train_loss, val_loss, step_scale, true, 0.0, 0.0},
                   net.params);

    if (train_loss < kSseTol) {
      reason = StopReason::converged;
      break;
    }
    if (early_stop_check(tracker.val_history, config.patience) == StopDecision::stop) {
      reason = StopReason::patience_exhausted;
      break;
    }
  }

  return tracker.finish(net, batch, config.loss, reason, timer.elapsed());
}

}  // namespace nnlm
