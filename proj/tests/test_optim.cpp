#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "nnlm/optim.hpp"

using namespace nnlm;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("split_train_val cardinalities and determinism") {
  std::mt19937_64 rng(3);
  auto [train, val] = split_train_val(10, 0.4, rng);
  CHECK(train.size() == 6);
  CHECK(val.size() == 4);
  std::set<int> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  CHECK(all.size() == 10);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 9);

  std::mt19937_64 rng_a(7), rng_b(7);
  CHECK(split_train_val(100, 0.4, rng_a) == split_train_val(100, 0.4, rng_b));

  std::mt19937_64 rng_c(1);
  auto [t2, v2] = split_train_val(2, 0.5, rng_c);
  CHECK(t2.size() == 1);
  CHECK(v2.size() == 1);
  CHECK_THROWS_AS(split_train_val(1, 0.5, rng_c), std::invalid_argument);
  CHECK_THROWS_AS(split_train_val(10, 0.01, rng_c), std::invalid_argument);
}

TEST_CASE("lm_step on identity systems") {
  Matrix eye = Matrix::Identity(2, 2);
  Vector r(2);
  r << 1, 2;
  auto s0 = lm_step(eye, r, 0.0);
  REQUIRE(s0.ok);
  CHECK(s0.delta.isApprox(r));
  auto s1 = lm_step(eye, r, 1.0);
  REQUIRE(s1.ok);
  CHECK(s1.delta(0) == doctest::Approx(0.5));
  CHECK(s1.delta(1) == doctest::Approx(1.0));
}

TEST_CASE("lm_step large-lambda asymptote") {
  std::mt19937_64 rng(11);
  Matrix jac = random_matrix(30, 8, rng);
  Vector r = random_matrix(30, 1, rng);
  const double lambda = 1e12;
  auto step = lm_step(jac, r, lambda);
  REQUIRE(step.ok);
  Vector asym = jac.transpose() * r / lambda;
  CHECK((step.delta - asym).norm() <= 1e-6 * asym.norm());
}

TEST_CASE("lm_step rejects non-finite input") {
  Matrix jac = Matrix::Identity(2, 2);
  Vector r(2);
  r << 1, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lm_step(jac, r, 1.0), std::invalid_argument);
  Vector r3(3);
  CHECK_THROWS_AS(lm_step(jac, r3.setZero(), 1.0), std::invalid_argument);
}

TEST_CASE("lm_step block accumulation matches the direct product") {
  std::mt19937_64 rng(42);
  Matrix jac = random_matrix(100, 12, rng);
  Vector r = random_matrix(100, 1, rng);
  auto blocked = lm_step(jac, r, 0.3, 7);
  auto direct = lm_step(jac, r, 0.3, 100000);
  REQUIRE(blocked.ok);
  REQUIRE(direct.ok);
  CHECK(blocked.delta.isApprox(direct.delta, 1e-12));
}

TEST_CASE("damping monotonicity of the step norm") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam_dist(-6.0, 6.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix jac = random_matrix(25, 6, rng);
    Vector r = random_matrix(25, 1, rng);
    double l1 = std::pow(10.0, lam_dist(rng));
    double l2 = std::pow(10.0, lam_dist(rng));
    if (l1 > l2) std::swap(l1, l2);
    auto s1 = lm_step(jac, r, l1);
    auto s2 = lm_step(jac, r, l2);
    REQUIRE(s1.ok);
    REQUIRE(s2.ok);
    CHECK(s1.delta.norm() >= s2.delta.norm() * (1.0 - 1e-12));
  }
}

TEST_CASE("train_lm recovers the closed-form linear least-squares solution") {
  std::mt19937_64 rng(9);
  const int n = 40;
  Matrix x = random_matrix(n, 3, rng);
  Vector true_w(3);
  true_w << 1.5, -2.0, 0.25;
  const double true_b = 0.7;
  Matrix y = x * true_w;
  y.array() += true_b;

  Network net = build_network({3, {}, 1}, 1);  // bare affine layer
  LMConfig cfg;
  cfg.max_epochs = 5;
  cfg.patience = 0;
  cfg.seed = 2;
  TrainReport report = train_lm(net, {x, y}, cfg);

  for (int j = 0; j < 3; ++j) CHECK(net.params(j) == doctest::Approx(true_w(j)).epsilon(1e-8));
  CHECK(net.params(3) == doctest::Approx(true_b).epsilon(1e-8));
  CHECK((y - forward(net, x)).squaredNorm() <= 1e-12);
  CHECK(report.stop_reason == StopReason::converged);
}

TEST_CASE("train_lm accepted steps strictly decrease the epoch SSE") {
  std::mt19937_64 rng(31);
  Matrix x = random_matrix(60, 1, rng);
  Matrix y = (x.array() * 2.0).sin().matrix();
  Network net = build_network({1, {8}, 1}, 6);
  LMConfig cfg;
  cfg.max_epochs = 40;
  cfg.patience = 0;
  cfg.seed = 3;
  TrainReport report = train_lm(net, {x, y}, cfg);
  REQUIRE(!report.epoch_history.empty());
  for (const auto& e : report.epoch_history) {
    if (e.accepted) CHECK(e.train_sse_after < e.train_sse_before);
    CHECK(e.step_scale > 0.0);
    CHECK(e.step_scale <= cfg.lambda_max);
  }
  CHECK(report.best_val_loss ==
        std::min_element(report.epoch_history.begin(), report.epoch_history.end(),
                         [](const auto& a, const auto& b) {
                           return a.val_loss < b.val_loss;
                         })->val_loss);
}

TEST_CASE("train_lm is fully deterministic") {
  std::mt19937_64 rng(8);
  Matrix x = random_matrix(30, 1, rng);
  Matrix y = x.array().tanh().matrix();
  LMConfig cfg;
  cfg.max_epochs = 15;
  cfg.seed = 4;
  Network a = build_network({1, {5}, 1}, 12);
  Network b = build_network({1, {5}, 1}, 12);
  TrainReport ra = train_lm(a, {x, y}, cfg);
  TrainReport rb = train_lm(b, {x, y}, cfg);
  REQUIRE(ra.epoch_history.size() == rb.epoch_history.size());
  for (std::size_t i = 0; i < ra.epoch_history.size(); ++i) {
    CHECK(ra.epoch_history[i].train_loss == rb.epoch_history[i].train_loss);
    CHECK(ra.epoch_history[i].val_loss == rb.epoch_history[i].val_loss);
  }
  CHECK(ra.best_params == rb.best_params);
}

TEST_CASE("early_stop_check") {
  CHECK(early_stop_check({0.5, 0.4, 0.41, 0.42, 0.43}, 3) == StopDecision::stop);
  CHECK(early_stop_check({0.5, 0.4, 0.41, 0.39}, 3) == StopDecision::keep_going);
  CHECK(early_stop_check({0.5, 0.4, 0.41, 0.42, 0.43}, 0) == StopDecision::keep_going);
  CHECK(early_stop_check({1.0}, 1) == StopDecision::keep_going);
  CHECK_THROWS_AS(early_stop_check({}, 1), std::invalid_argument);
}

TEST_CASE("adam first step moves by about -lr * sign(g)") {
  // one linear parameter, fixed data, known gradient sign
  Matrix x(4, 1);
  x << 1, 1, 1, 1;
  Matrix y(4, 1);
  y << 2, 2, 2, 2;
  Network net = build_network({1, {}, 1}, 0);
  net.params << 0.0, 0.0;  // yhat = 0, r = 2 > 0 -> gradient negative
  GradConfig cfg;
  cfg.optimizer = GradKind::adam;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 1;
  cfg.patience = 0;
  cfg.val_fraction = 0.25;
  cfg.seed = 1;
  Vector before = net.params;
  TrainReport report = train_grad(net, {x, y}, cfg);
  Vector delta = report.epoch_history.empty()
                     ? Vector()
                     : Vector(net.params - before);
  // both params had g < 0, so both move by ~ +lr
  CHECK(delta(0) == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(delta(1) == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("rprop first step is -delta0 * sign(g)") {
  Matrix x(4, 1);
  x << 1, 1, 1, 1;
  Matrix y(4, 1);
  y << 2, 2, 2, 2;
  Network net = build_network({1, {}, 1}, 0);
  net.params << 0.0, 0.0;
  GradConfig cfg;
  cfg.optimizer = GradKind::rprop;
  cfg.max_epochs = 1;
  cfg.patience = 0;
  cfg.val_fraction = 0.25;
  cfg.seed = 1;
  TrainReport report = train_grad(net, {x, y}, cfg);
  CHECK(report.best_params(0) == doctest::Approx(0.07));
  CHECK(report.best_params(1) == doctest::Approx(0.07));
}

TEST_CASE("rprop step sizes stay within their clamp range") {
  std::mt19937_64 rng(13);
  Matrix x = random_matrix(40, 1, rng);
  Matrix y = (x.array() * 3.0).cos().matrix();
  Network net = build_network({1, {6}, 1}, 2);
  GradConfig cfg;
  cfg.optimizer = GradKind::rprop;
  cfg.max_epochs = 200;
  cfg.patience = 0;
  cfg.seed = 5;
  TrainReport report = train_grad(net, {x, y}, cfg);
  for (const auto& e : report.epoch_history) {
    CHECK(e.step_scale >= 1e-9);
    CHECK(e.step_scale <= cfg.rprop_delta_max);
  }
}

TEST_CASE("sgdm drives a convex quadratic far below its start") {
  // single affine parameter pair fitting y = 0.8 x + 0.1 exactly
  std::mt19937_64 rng(17);
  Matrix x = random_matrix(50, 1, rng);
  Matrix y = (0.8 * x.array() + 0.1).matrix();
  Network net = build_network({1, {}, 1}, 3);
  const double initial = batch_loss(net, {x, y}, LossKind::mse);
  GradConfig cfg;
  cfg.optimizer = GradKind::sgdm;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  cfg.max_epochs = 200;
  cfg.patience = 0;
  cfg.resplit_each_epoch = false;
  cfg.seed = 6;
  train_grad(net, {x, y}, cfg);
  CHECK(batch_loss(net, {x, y}, LossKind::mse) < 1e-6 * initial);
}

TEST_CASE("train_grad determinism") {
  std::mt19937_64 rng(19);
  Matrix x = random_matrix(30, 1, rng);
  Matrix y = x.array().square().matrix();
  GradConfig cfg;
  cfg.optimizer = GradKind::adam;
  cfg.max_epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 10;
  Network a = build_network({1, {4}, 1}, 14);
  Network b = build_network({1, {4}, 1}, 14);
  TrainReport ra = train_grad(a, {x, y}, cfg);
  TrainReport rb = train_grad(b, {x, y}, cfg);
  CHECK(ra.best_params == rb.best_params);
  CHECK(ra.best_val_loss == rb.best_val_loss);
}
