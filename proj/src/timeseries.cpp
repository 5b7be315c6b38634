#include "nnlm/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nnlm {

void EventSeries::validate() const {
  if (input.size() != output.size())
    throw std::invalid_argument("EventSeries: input and output lengths differ");
  if (input.size() == 0) throw std::invalid_argument("EventSeries: empty series");
  if (event_ends.empty()) throw std::invalid_argument("EventSeries: no events");
  for (std::size_t i = 1; i < event_ends.size(); ++i)
    if (event_ends[i] <= event_ends[i - 1])
      throw std::invalid_argument("EventSeries: event_ends not strictly increasing");
  if (event_ends.front() < 0 || event_ends.back() != size() - 1)
    throw std::invalid_argument("EventSeries: events do not partition the series");
}

Vector Normalizer::apply(const Vector& x) const {
  return (2.0 * (x.array() - lo) / (hi - lo) - 1.0).matrix();
}

Vector Normalizer::invert(const Vector& y) const {
  return (lo + (y.array() + 1.0) * (hi - lo) / 2.0).matrix();
}

Normalizer fit_normalizer(const Vector& reference) {
  if (reference.size() == 0) throw std::invalid_argument("fit_normalizer: empty range");
  Normalizer norm;
  norm.lo = reference.minCoeff();
  norm.hi = reference.maxCoeff();
  if (!(norm.hi > norm.lo))
    throw std::invalid_argument("fit_normalizer: constant channel");
  return norm;
}

SeriesNormalizer fit_series_normalizer(const EventSeries& series, int n_fit_samples) {
  series.validate();
  if (n_fit_samples < 1 || n_fit_samples > series.size())
    throw std::invalid_argument("fit_series_normalizer: bad fit range");
  SeriesNormalizer norm;
  norm.input = fit_normalizer(series.input.head(n_fit_samples));
  norm.output = fit_normalizer(series.output.head(n_fit_samples));
  return norm;
}

EventSeries normalize(const EventSeries& series, const SeriesNormalizer& norm) {
  EventSeries out = series;
  out.input = norm.input.apply(series.input);
  out.output = norm.output.apply(series.output);
  return out;
}

std::vector<int> GenConfig::resolved_anomaly_events() const {
  if (anomaly_events) return *anomaly_events;
  return {n_events - 2, n_events - 1};
}

void GenConfig::validate() const {
  if (n_events < 3) throw std::invalid_argument("GenConfig: n_events must be >= 3");
  if (samples_per_event < 8)
    throw std::invalid_argument("GenConfig: samples_per_event must be >= 8");
  if (anomaly_gain < 1.0)
    throw std::invalid_argument("GenConfig: anomaly_gain must be >= 1");
  if (jump_rate < 0) throw std::invalid_argument("GenConfig: jump_rate must be >= 0");
  for (int e : resolved_anomaly_events())
    if (e < 0 || e >= n_events)
      throw std::invalid_argument("GenConfig: anomaly event index out of range");
}

EngineData gen_engine_like_full(const GenConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  // run-constant smooth input->output law: a few tanh bumps, rescaled to a
  // fixed amplitude so the anomaly gain has a predictable effect
  constexpr int kBumps = 6;
  std::uniform_real_distribution<double> amp_dist(-0.6, 0.6);
  std::uniform_real_distribution<double> slope_dist(3.0, 12.0);
  std::uniform_real_distribution<double> center_dist(-0.8, 0.8);
  std::vector<double> amp(kBumps), slope(kBumps), center(kBumps);
  for (int k = 0; k < kBumps; ++k) {
    amp[k] = amp_dist(rng);
    slope[k] = slope_dist(rng);
    center[k] = center_dist(rng);
  }
  auto raw_map = [=](double x) {
    double y = 0.0;
    for (int k = 0; k < kBumps; ++k) y += amp[k] * std::tanh(slope[k] * (x - center[k]));
    return y;
  };
  double peak = 0.0;
  for (int i = 0; i <= 200; ++i)
    peak = std::max(peak, std::abs(raw_map(-1.0 + i * 0.01)));
  const double scale = 0.8 / std::max(peak, 1e-6);
  auto clean_map = [=](double x) { return scale * raw_map(x); };

  const int spe = config.samples_per_event;
  const int n = config.n_events * spe;
  const std::vector<int> anomalies = config.resolved_anomaly_events();
  auto is_anomaly = [&](int e) {
    return std::find(anomalies.begin(), anomalies.end(), e) != anomalies.end();
  };

  Vector input(n), output(n);
  std::uniform_real_distribution<double> level_dist(-0.9, 0.9);
  std::uniform_real_distribution<double> jitter_dist(0.7, 1.3);
  std::uniform_real_distribution<double> burst_pos_dist(0.1, 0.9);
  std::normal_distribution<double> input_noise(0.0, 0.01);
  std::normal_distribution<double> unit_noise(0.0, 1.0);
  constexpr int kRamp = 5;

  std::vector<int> event_ends(config.n_events);
  for (int e = 0; e < config.n_events; ++e) {
    const int begin = e * spe;
    event_ends[e] = begin + spe - 1;

    // piecewise-constant level schedule with jittered segment lengths
    const int n_seg = config.jump_rate + 1;
    std::vector<double> levels(n_seg);
    std::vector<int> seg_len(n_seg);
    double total_w = 0.0;
    std::vector<double> w(n_seg);
    for (int s = 0; s < n_seg; ++s) {
      levels[s] = level_dist(rng);
      w[s] = jitter_dist(rng);
      total_w += w[s];
    }
    int assigned = 0;
    for (int s = 0; s < n_seg; ++s) {
      seg_len[s] = (s == n_seg - 1) ? spe - assigned
                                    : std::max(1, static_cast<int>(spe * w[s] / total_w));
      assigned += seg_len[s];
    }

    int t = begin;
    for (int s = 0; s < n_seg && t < begin + spe; ++s) {
      for (int i = 0; i < seg_len[s] && t < begin + spe; ++i, ++t) {
        double level = levels[s];
        if (s > 0 && i < kRamp)  // short ramp from the previous level
          level = levels[s - 1] + (levels[s] - levels[s - 1]) * (i + 1) / (kRamp + 1.0);
        input(t) = level + input_noise(rng);
      }
    }

    const double gain = is_anomaly(e) ? config.anomaly_gain : 1.0;
    const double burst_amp = is_anomaly(e) ? 0.8 * (config.anomaly_gain - 1.0) : 0.0;
    const double burst_center = begin + burst_pos_dist(rng) * spe;
    const double burst_width = spe / 40.0;
    for (int i = begin; i < begin + spe; ++i) {
      const double x = input(i);
      const double sigma = 0.02 * (0.6 + std::abs(x));
      double y = gain * clean_map(x) + sigma * unit_noise(rng);
      if (burst_amp != 0.0) {
        const double u = (i - burst_center) / burst_width;
        y += burst_amp * std::exp(-0.5 * u * u);
      }
      output(i) = y;
    }
  }

  // failure spike at the tail of the final event
  if (config.failure_spike != 0.0) {
    const int begin = (config.n_events - 1) * spe;
    const int peak_idx = begin + static_cast<int>(0.9 * spe);
    output(peak_idx) = config.failure_spike;
    if (peak_idx - 1 >= begin) output(peak_idx - 1) = 0.5 * config.failure_spike;
    if (peak_idx + 1 < n) output(peak_idx + 1) = 0.3 * config.failure_spike;
  }

  EngineData data;
  data.series = EventSeries{std::move(input), std::move(output),
                            std::move(event_ends), "engine-synthetic"};
  data.series.validate();
  data.clean_map = clean_map;
  return data;
}

EventSeries gen_engine_like(const GenConfig& config) {
  return gen_engine_like_full(config).series;
}

Batch gen_sinc(int n_points, double half_range) {
  if (n_points < 2) throw std::invalid_argument("gen_sinc: need n_points >= 2");
  Batch batch;
  batch.inputs.resize(n_points, 1);
  batch.targets.resize(n_points, 1);
  for (int i = 0; i < n_points; ++i) {
    const double x = -half_range + 2.0 * half_range * i / (n_points - 1);
    batch.inputs(i, 0) = x;
    const double px = M_PI * x;
    batch.targets(i, 0) = x == 0.0 ? 1.0 : std::sin(px) / px;
  }
  return batch;
}

std::pair<std::vector<int>, std::vector<int>> event_sample_ranges(
    const EventSeries& series) {
  std::vector<int> begins(series.n_events()), ends(series.n_events());
  for (int e = 0; e < series.n_events(); ++e) {
    begins[e] = series.event_begin(e);
    ends[e] = series.event_end(e);
  }
  return {std::move(begins), std::move(ends)};
}

std::pair<EventSeries, EventSeries> split_by_events(const EventSeries& series,
                                                    int n_train_events) {
  series.validate();
  if (n_train_events < 1 || n_train_events >= series.n_events())
    throw std::invalid_argument("split_by_events: n_train_events out of range");
  const int boundary = series.event_ends[n_train_events - 1] + 1;

  EventSeries train;
  train.name = series.name + "/train";
  train.input = series.input.head(boundary);
  train.output = series.output.head(boundary);
  train.event_ends.assign(series.event_ends.begin(),
                          series.event_ends.begin() + n_train_events);

  EventSeries test;
  test.name = series.name + "/test";
  test.input = series.input.tail(series.size() - boundary);
  test.output = series.output.tail(series.size() - boundary);
  for (int e = n_train_events; e < series.n_events(); ++e)
    test.event_ends.push_back(series.event_ends[e] - boundary);
  return {std::move(train), std::move(test)};
}

Matrix window(const Vector& series, int width, int stride) {
  if (width < 1 || width > series.size())
    throw std::invalid_argument("window: width out of range");
  if (stride < 1) throw std::invalid_argument("window: stride must be >= 1");
  const int count = (static_cast<int>(series.size()) - width) / stride + 1;
  Matrix out(count, width);
  for (int w = 0; w < count; ++w)
    out.row(w) = series.segment(static_cast<Eigen::Index>(w) * stride, width);
  return out;
}

Vector dewindow(const Matrix& windows, int stride, int length) {
  Vector sum = Vector::Zero(length);
  Vector count = Vector::Zero(length);
  const int width = static_cast<int>(windows.cols());
  for (Eigen::Index w = 0; w < windows.rows(); ++w) {
    const int start = static_cast<int>(w) * stride;
    sum.segment(start, width) += windows.row(w).transpose();
    count.segment(start, width).array() += 1.0;
  }
  for (int i = 0; i < length; ++i)
    if (count(i) > 0) sum(i) /= count(i);
  return sum;
}

Vector window_abs_error(const Matrix& windows, const Matrix& recon, int stride,
                        int length) {
  if (windows.rows() != recon.rows() || windows.cols() != recon.cols())
    throw std::invalid_argument("window_abs_error: shape mismatch");
  return dewindow((windows - recon).cwiseAbs(), stride, length);
}

// --- CSV ---------------------------------------------------------------

static const char* kCsvHeader = "index,input,output,event_end";

EventSeries load_series_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("series csv: empty file");
  if (line != kCsvHeader)
    throw std::runtime_error("series csv: expected header '" + std::string(kCsvHeader) +
                             "', got '" + line + "'");
  std::vector<double> input, output;
  std::vector<int> event_ends;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    double vals[3];
    int mark;
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("series csv: row " + std::to_string(row) +
                                 ": missing column " + std::to_string(c));
      std::size_t pos = 0;
      try {
        vals[c] = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size())
        throw std::runtime_error("series csv: row " + std::to_string(row) +
                                 ": non-numeric cell '" + cell + "'");
    }
    if (!std::getline(ls, cell) || (cell != "0" && cell != "1"))
      throw std::runtime_error("series csv: row " + std::to_string(row) +
                               ": event_end must be 0 or 1");
    mark = cell == "1" ? 1 : 0;
    input.push_back(vals[1]);
    output.push_back(vals[2]);
    if (mark) event_ends.push_back(row);
    ++row;
  }
  if (row == 0) throw std::runtime_error("series csv: no data rows");
  if (event_ends.empty()) throw std::runtime_error("series csv: no event marks");
  if (event_ends.back() != row - 1)
    throw std::runtime_error("series csv: last row must close an event");
  EventSeries series;
  series.input = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  series.output = Eigen::Map<const Vector>(output.data(), static_cast<Eigen::Index>(output.size()));
  series.event_ends = std::move(event_ends);
  series.name = name;
  series.validate();
  return series;
}

EventSeries load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open series csv: " + path);
  return load_series_csv(in, path);
}

void save_series_csv(const EventSeries& series, std::ostream& out) {
  series.validate();
  out << kCsvHeader << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::size_t next_end = 0;
  for (int i = 0; i < series.size(); ++i) {
    const bool mark = next_end < series.event_ends.size() &&
                      series.event_ends[next_end] == i;
    if (mark) ++next_end;
    out << i << "," << series.input(i) << "," << series.output(i) << ","
        << (mark ? 1 : 0) << "\n";
  }
}

void save_series_csv(const EventSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open series csv for writing: " + path);
  save_series_csv(series, out);
}

}  // namespace nnlm
