#include <doctest.h>

#include <random>
#include <sstream>

#include "nnlm/network.hpp"

using namespace nnlm;

namespace {

Network make_1_1_1(double w1, double b1, double w2, double b2) {
  Network net = build_network({1, {1}, 1}, 0);
  net.params << w1, b1, w2, b2;
  return net;
}

Matrix random_inputs(int n, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Matrix x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) x(i, j) = dist(rng);
  return x;
}

}  // namespace

TEST_CASE("param_count follows the counting formula") {
  CHECK(NetworkSpec{1, {40}, 1}.param_count() == 121);
  CHECK(NetworkSpec{1, {20}, 1}.param_count() == 61);
  CHECK(NetworkSpec{1, {100, 50, 25}, 1}.param_count() ==
        2 * 100 + 101 * 50 + 51 * 25 + 26);
  CHECK(NetworkSpec{32, {10}, 32}.param_count() == 33 * 10 + 11 * 32);
  CHECK(NetworkSpec{3, {}, 2}.param_count() == 8);  // bare affine layer
}

TEST_CASE("build_network is deterministic and rejects bad specs") {
  NetworkSpec spec{2, {7, 3}, 1};
  Network a = build_network(spec, 42);
  Network b = build_network(spec, 42);
  CHECK(a.params == b.params);
  CHECK(a.params.size() == spec.param_count());
  Network c = build_network(spec, 43);
  CHECK(a.params != c.params);

  CHECK_THROWS_AS(build_network({0, {5}, 1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_network({1, {0}, 1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_network({2, {5}, 3, NetMode::autoencoder}, 0),
                  std::invalid_argument);
}

TEST_CASE("initialization bounds and zero biases") {
  NetworkSpec spec{1, {40}, 1};
  Network net = build_network(spec, 9);
  const double bound0 = std::sqrt(6.0 / 41);
  for (int i = 0; i < 40; ++i) CHECK(std::abs(net.params(i)) <= bound0);
  CHECK(net.biases(0).isZero());
  CHECK(net.biases(1).isZero());
}

TEST_CASE("forward trivial cases") {
  Network zero = build_network({1, {5}, 1}, 0);
  zero.params.setZero();
  Matrix x(3, 1);
  x << -1, 0, 2;
  CHECK(forward(zero, x).isZero());

  CHECK(forward(make_1_1_1(0, 0, 1, 0.5), (Matrix(1, 1) << 3).finished())(0, 0) ==
        doctest::Approx(0.5));
  CHECK(forward(make_1_1_1(1, 0, 1, 0), (Matrix(1, 1) << 0).finished())(0, 0) ==
        doctest::Approx(0.0));

  Matrix bad(2, 3);
  CHECK_THROWS_AS(forward(zero, bad), std::invalid_argument);
}

TEST_CASE("forward has no cross-sample coupling") {
  std::mt19937_64 rng(5);
  Network net = build_network({3, {6, 4}, 2}, 11);
  Matrix a = random_inputs(4, 3, rng);
  Matrix b = random_inputs(7, 3, rng);
  Matrix both(11, 3);
  both << a, b;
  Matrix out = forward(net, both);
  CHECK(out.topRows(4).isApprox(forward(net, a)));
  CHECK(out.bottomRows(7).isApprox(forward(net, b)));
}

TEST_CASE("hidden activations stay strictly inside (-1,1)") {
  Network net = build_network({1, {8}, 1}, 3);
  net.params.head(8).array() *= 4.0;  // steepen the first layer
  for (double xv : {-5.0, -1.0, 0.3, 5.0}) {
    Matrix x(1, 1);
    x << xv;
    Vector z = net.weights(0).transpose() * x.row(0).transpose() + net.biases(0);
    Vector h = z.array().tanh();
    CHECK((h.array().abs() < 1.0).all());
  }
}

TEST_CASE("jacobian of a 1-1-1 net at the origin") {
  Network net = make_1_1_1(0, 0, 1, 0);
  Matrix x(1, 1);
  x << 1.0;
  Matrix jac = jacobian(net, x);
  REQUIRE(jac.rows() == 1);
  REQUIRE(jac.cols() == 4);
  // [d/dw1, d/db1, d/dw2, d/db2] with tanh'(0)=1, tanh(0)=0
  CHECK(jac(0, 0) == doctest::Approx(1.0));
  CHECK(jac(0, 1) == doctest::Approx(1.0));
  CHECK(jac(0, 2) == doctest::Approx(0.0));
  CHECK(jac(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("output bias column of the jacobian is all ones") {
  Network net = build_network({2, {5}, 1}, 17);
  std::mt19937_64 rng(1);
  Matrix x = random_inputs(6, 2, rng);
  Matrix jac = jacobian(net, x);
  CHECK(jac.col(net.param_count() - 1).isApproxToConstant(1.0));
}

TEST_CASE("jacobian matches central finite differences on random nets") {
  std::mt19937_64 rng(1234);
  const std::vector<NetworkSpec> specs = {
      {1, {10}, 1},  {2, {8, 4}, 1},   {3, {6}, 2},      {1, {20}, 1},
      {4, {5, 5}, 3}, {2, {12}, 2},    {1, {7, 7}, 1},   {5, {8}, 4},
      {2, {}, 3},     {3, {9, 3}, 2},
  };
  for (std::size_t i = 0; i < specs.size(); ++i) {
    REQUIRE(specs[i].param_count() <= 200);
    Network net = build_network(specs[i], 100 + i);
    Matrix x = random_inputs(5, specs[i].input_dim, rng);
    Matrix ad = jacobian(net, x);
    Matrix fd = finite_diff_jacobian(net, x, 1e-6);
    const double err = (ad - fd).cwiseAbs().maxCoeff();
    const double scale = 1.0 + fd.cwiseAbs().maxCoeff();
    CHECK(err <= 1e-6 * scale);
  }
}

TEST_CASE("finite_diff_jacobian rejects h = 0 and flags constant nets") {
  Network net = build_network({1, {3}, 1}, 0);
  Matrix x(2, 1);
  x << 0.5, -0.5;
  CHECK_THROWS_AS(finite_diff_jacobian(net, x, 0.0), std::invalid_argument);

  // zero all weights into the output, keep a bias: constant output
  net.params.setZero();
  net.biases(1)(0) = 2.5;
  Matrix fd = finite_diff_jacobian(net, x, 1e-6);
  // every column is zero except the output bias column
  for (int j = 0; j < net.param_count() - 1; ++j) {
    // hidden weights/biases still perturb tanh activations, but the zero
    // output weights kill their effect
    CHECK(fd.col(j).cwiseAbs().maxCoeff() <= 1e-9);
  }
  CHECK(fd.col(net.param_count() - 1).isApproxToConstant(1.0, 1e-6));
}

TEST_CASE("loss_gradient agrees with the explicit J^T r product") {
  std::mt19937_64 rng(77);
  Network net = build_network({2, {6}, 2}, 8);
  Batch batch{random_inputs(9, 2, rng), random_inputs(9, 2, rng)};
  Vector grad = loss_gradient(net, batch, LossKind::mse);

  Matrix jac = jacobian(net, batch.inputs);
  Matrix rmat = batch.targets - forward(net, batch.inputs);
  Vector r = rmat.transpose().reshaped();
  Vector expected = -(2.0 / batch.size()) * jac.transpose() * r;
  CHECK(grad.isApprox(expected, 1e-10));
}

TEST_CASE("loss_gradient at a perfect fit is zero") {
  Network net = build_network({1, {4}, 1}, 21);
  Matrix x(5, 1);
  x << -2, -1, 0, 1, 2;
  Batch batch{x, forward(net, x)};
  CHECK(loss_gradient(net, batch, LossKind::mse).isZero(1e-14));
  CHECK(loss_gradient(net, batch, LossKind::mae).isZero(1e-14));
}

TEST_CASE("mae gradient on a single positive-residual sample") {
  Network net = build_network({1, {3}, 1}, 4);
  Matrix x(1, 1);
  x << 0.7;
  Batch batch{x, forward(net, x).array() + 1.0};  // r = +1
  Vector grad = loss_gradient(net, batch, LossKind::mae);
  Matrix jac = jacobian(net, x);
  CHECK(grad.isApprox(-jac.transpose().col(0), 1e-12));
}

TEST_CASE("model save/load round trip is value-exact") {
  Network net = build_network({2, {5, 3}, 2}, 99);
  std::stringstream buf;
  save_model(net, buf);
  Network back = load_model(buf);
  CHECK(back.spec.hidden == net.spec.hidden);
  CHECK(back.params == net.params);

  std::stringstream bad("not a model\n");
  CHECK_THROWS(load_model(bad));
}

TEST_CASE("deterministic forward for identical spec/seed/inputs") {
  Matrix x(3, 1);
  x << 0.1, 0.2, 0.3;
  Matrix a = forward(build_network({1, {9}, 1}, 5), x);
  Matrix b = forward(build_network({1, {9}, 1}, 5), x);
  CHECK(a == b);
}
