#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nnlm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class LossKind { mse, mae };

enum class NetMode { regressor, autoencoder };

/// Architecture of a dense feedforward net: tanh hidden layers, linear output.
/// hidden may be empty, which degenerates to a single affine (linear) layer.
struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> hidden;
  int output_dim = 1;
  NetMode mode = NetMode::regressor;

  void validate() const;
  int param_count() const;
};

/// Dense net with a flat parameter vector. Flattening order: per layer,
/// weight matrix row-major (one output neuron's incoming weights are
/// contiguous), then that layer's biases; layers input to output.
struct Network {
  NetworkSpec spec;
  Vector params;

  int param_count() const { return spec.param_count(); }
  int n_layers() const { return static_cast<int>(spec.hidden.size()) + 1; }
  int layer_in(int k) const;
  int layer_out(int k) const;
  int layer_offset(int k) const;  // offset of layer k's weights in params

  Eigen::Map<const Matrix> weights(int k) const;
  Eigen::Map<const Vector> biases(int k) const;
  Eigen::Map<Matrix> weights(int k);
  Eigen::Map<Vector> biases(int k);
};

struct Batch {
  Matrix inputs;   // N x input_dim
  Matrix targets;  // N x output_dim

  int size() const { return static_cast<int>(inputs.rows()); }
  void validate() const;
};

/// Scaled-uniform weights, bounds +-sqrt(6/(fan_in+fan_out)), zero biases.
Network build_network(const NetworkSpec& spec, std::uint64_t seed);

/// Row-per-sample evaluation, N x output_dim.
Matrix forward(const Network& net, const Matrix& inputs);

/// d yhat / d theta, (N * output_dim) x param_count, rows sample-major
/// then output-dimension. Exact reverse-mode.
Matrix jacobian(const Network& net, const Matrix& inputs);

/// Central-difference Jacobian, test oracle only.
Matrix finite_diff_jacobian(const Network& net, const Matrix& inputs, double h);

/// Gradient of the mean loss over the batch (sum over output dims, mean
/// over samples). MAE uses sign(residual) with sign(0) = 0.
Vector loss_gradient(const Network& net, const Batch& batch, LossKind loss);

/// mse = SSE / N, mae = sum |r| / N.
double batch_loss(const Network& net, const Batch& batch, LossKind loss);

void save_model(const Network& net, std::ostream& out);
void save_model(const Network& net, const std::string& path);
Network load_model(std::istream& in);
Network load_model(const std::string& path);

}  // namespace nnlm
