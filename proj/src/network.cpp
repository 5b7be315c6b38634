#include "nnlm/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nnlm {

void NetworkSpec::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("NetworkSpec: dimensions must be >= 1");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("NetworkSpec: hidden layer size must be >= 1");
  if (mode == NetMode::autoencoder && input_dim != output_dim)
    throw std::invalid_argument("NetworkSpec: autoencoder requires input_dim == output_dim");
}

int NetworkSpec::param_count() const {
  int count = 0;
  int fan_in = input_dim;
  for (int h : hidden) {
    count += (fan_in + 1) * h;
    fan_in = h;
  }
  count += (fan_in + 1) * output_dim;
  return count;
}

int Network::layer_in(int k) const {
  return k == 0 ? spec.input_dim : spec.hidden[k - 1];
}

int Network::layer_out(int k) const {
  return k == static_cast<int>(spec.hidden.size()) ? spec.output_dim : spec.hidden[k];
}

int Network::layer_offset(int k) const {
  int off = 0;
  for (int i = 0; i < k; ++i) off += (layer_in(i) + 1) * layer_out(i);
  return off;
}

Eigen::Map<const Matrix> Network::weights(int k) const {
  // stored row-major; mapped as (in x out) column-major, i.e. transposed,
  // so forward can compute H * W_t directly
  return {params.data() + layer_offset(k), layer_in(k), layer_out(k)};
}

Eigen::Map<const Vector> Network::biases(int k) const {
  return {params.data() + layer_offset(k) + layer_in(k) * layer_out(k), layer_out(k)};
}

Eigen::Map<Matrix> Network::weights(int k) {
  return {params.data() + layer_offset(k), layer_in(k), layer_out(k)};
}

Eigen::Map<Vector> Network::biases(int k) {
  return {params.data() + layer_offset(k) + layer_in(k) * layer_out(k), layer_out(k)};
}

void Batch::validate() const {
  if (inputs.rows() != targets.rows())
    throw std::invalid_argument("Batch: inputs and targets row counts differ");
  if (inputs.rows() < 1) throw std::invalid_argument("Batch: empty batch");
}

Network build_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.params = Vector::Zero(spec.param_count());
  std::mt19937_64 rng(seed);
  const int n_layers = net.n_layers();
  for (int k = 0; k < n_layers; ++k) {
    const int fan_in = net.layer_in(k);
    const int fan_out = net.layer_out(k);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* w = net.params.data() + net.layer_offset(k);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = dist(rng);
    // biases stay zero
  }
  return net;
}

static void check_input_dims(const Network& net, const Matrix& inputs) {
  if (inputs.cols() != net.spec.input_dim)
    throw std::invalid_argument("input column count does not match input_dim");
}

Matrix forward(const Network& net, const Matrix& inputs) {
  check_input_dims(net, inputs);
  Matrix h = inputs;
  const int last = net.n_layers() - 1;
  for (int k = 0; k <= last; ++k) {
    Matrix z = h * net.weights(k);
    z.rowwise() += net.biases(k).transpose();
    if (k < last)
      h = z.array().tanh().matrix();
    else
      h = std::move(z);
  }
  return h;
}

Matrix jacobian(const Network& net, const Matrix& inputs) {
  check_input_dims(net, inputs);
  const int n = static_cast<int>(inputs.rows());
  const int out_dim = net.spec.output_dim;
  const int n_params = net.param_count();
  const int last = net.n_layers() - 1;

  // forward pass, keeping every activation
  std::vector<Matrix> acts(net.n_layers() + 1);
  acts[0] = inputs;
  for (int k = 0; k <= last; ++k) {
    Matrix z = acts[k] * net.weights(k);
    z.rowwise() += net.biases(k).transpose();
    acts[k + 1] = (k < last) ? z.array().tanh().matrix() : std::move(z);
  }

  Matrix jac = Matrix::Zero(static_cast<Eigen::Index>(n) * out_dim, n_params);
  Vector delta, delta_prev;
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < out_dim; ++o) {
      const int row = s * out_dim + o;
      // output layer: only row o of W_last sees gradient
      delta = Vector::Zero(out_dim);
      delta(o) = 1.0;
      for (int k = last; k >= 0; --k) {
        const int off = net.layer_offset(k);
        const int fan_in = net.layer_in(k);
        const int fan_out = net.layer_out(k);
        // dW (row-major flat): outer product delta x a_prev
        for (int j = 0; j < fan_out; ++j) {
          if (delta(j) == 0.0 && k == last) continue;
          jac.block(row, off + j * fan_in, 1, fan_in) =
              delta(j) * acts[k].row(s);
        }
        jac.block(row, off + fan_in * fan_out, 1, fan_out) = delta.transpose();
        if (k > 0) {
          delta_prev = net.weights(k) * delta;
          delta_prev.array() *= 1.0 - acts[k].row(s).transpose().array().square();
          delta = std::move(delta_prev);
        }
      }
    }
  }
  return jac;
}

Matrix finite_diff_jacobian(const Network& net, const Matrix& inputs, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_jacobian: h must be > 0");
  check_input_dims(net, inputs);
  const int n_params = net.param_count();
  const int out_dim = net.spec.output_dim;
  Matrix jac(inputs.rows() * out_dim, n_params);
  Network probe = net;
  for (int j = 0; j < n_params; ++j) {
    const double saved = probe.params(j);
    probe.params(j) = saved + h;
    Matrix plus = forward(probe, inputs);
    probe.params(j) = saved - h;
    Matrix minus = forward(probe, inputs);
    probe.params(j) = saved;
    Matrix diff = (plus - minus) / (2.0 * h);
    // flatten sample-major, output-dimension minor
    for (Eigen::Index s = 0; s < diff.rows(); ++s)
      for (int o = 0; o < out_dim; ++o) jac(s * out_dim + o, j) = diff(s, o);
  }
  return jac;
}

Vector loss_gradient(const Network& net, const Batch& batch, LossKind loss) {
  batch.validate();
  check_input_dims(net, batch.inputs);
  if (batch.targets.cols() != net.spec.output_dim)
    throw std::invalid_argument("target column count does not match output_dim");
  const int n = batch.size();
  const int last = net.n_layers() - 1;

  std::vector<Matrix> acts(net.n_layers() + 1);
  acts[0] = batch.inputs;
  for (int k = 0; k <= last; ++k) {
    Matrix z = acts[k] * net.weights(k);
    z.rowwise() += net.biases(k).transpose();
    acts[k + 1] = (k < last) ? z.array().tanh().matrix() : std::move(z);
  }

  // d loss / d yhat
  Matrix d = acts[last + 1] - batch.targets;  // = -r
  if (loss == LossKind::mse) {
    d *= 2.0 / n;
  } else {
    d = d.array().sign().matrix() / static_cast<double>(n);
  }

  Vector grad = Vector::Zero(net.param_count());
  for (int k = last; k >= 0; --k) {
    const int off = net.layer_offset(k);
    const int fan_in = net.layer_in(k);
    const int fan_out = net.layer_out(k);
    Matrix dw = acts[k].transpose() * d;  // fan_in x fan_out
    for (int j = 0; j < fan_out; ++j)
      grad.segment(off + j * fan_in, fan_in) = dw.col(j);
    grad.segment(off + fan_in * fan_out, fan_out) = d.colwise().sum();
    if (k > 0) {
      d = (d * net.weights(k).transpose()).eval();
      d.array() *= 1.0 - acts[k].array().square();
    }
  }
  return grad;
}

double batch_loss(const Network& net, const Batch& batch, LossKind loss) {
  batch.validate();
  Matrix r = batch.targets - forward(net, batch.inputs);
  if (loss == LossKind::mse) return r.squaredNorm() / batch.size();
  return r.array().abs().sum() / batch.size();
}

// --- model persistence -------------------------------------------------

static const char* kModelMagic = "nnlm-model v1";

void save_model(const Network& net, std::ostream& out) {
  out << kModelMagic << "\n";
  out << "mode " << (net.spec.mode == NetMode::autoencoder ? "autoencoder" : "regressor") << "\n";
  out << "input_dim " << net.spec.input_dim << "\n";
  out << "hidden";
  for (int h : net.spec.hidden) out << " " << h;
  out << "\n";
  out << "output_dim " << net.spec.output_dim << "\n";
  out << "param_count " << net.param_count() << "\n";
  out << "params\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < net.params.size(); ++i) out << net.params(i) << "\n";
}

void save_model(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  save_model(net, out);
}

Network load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic)
    throw std::runtime_error("model file: bad or missing header");
  NetworkSpec spec;
  spec.hidden.clear();
  int param_count = -1;
  while (std::getline(in, line) && line != "params") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "mode") {
      std::string m;
      ls >> m;
      if (m == "autoencoder") spec.mode = NetMode::autoencoder;
      else if (m == "regressor") spec.mode = NetMode::regressor;
      else throw std::runtime_error("model file: unknown mode " + m);
    } else if (key == "input_dim") {
      ls >> spec.input_dim;
    } else if (key == "hidden") {
      int h;
      while (ls >> h) spec.hidden.push_back(h);
    } else if (key == "output_dim") {
      ls >> spec.output_dim;
    } else if (key == "param_count") {
      ls >> param_count;
    } else {
      throw std::runtime_error("model file: unknown field " + key);
    }
  }
  spec.validate();
  if (param_count != spec.param_count())
    throw std::runtime_error("model file: param_count does not match spec");
  Network net;
  net.spec = spec;
  net.params.resize(param_count);
  for (int i = 0; i < param_count; ++i) {
    if (!(in >> net.params(i)))
      throw std::runtime_error("model file: truncated parameter list");
  }
  return net;
}

Network load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace nnlm
