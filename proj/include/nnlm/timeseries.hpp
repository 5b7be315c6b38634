#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nnlm/network.hpp"

namespace nnlm {

/// Paired input/output signal partitioned into contiguous events.
/// event_ends holds the last sample index of each event; the last entry is
/// always N-1.
struct EventSeries {
  Vector input;
  Vector output;
  std::vector<int> event_ends;
  std::string name;

  int size() const { return static_cast<int>(input.size()); }
  int n_events() const { return static_cast<int>(event_ends.size()); }
  int event_begin(int e) const { return e == 0 ? 0 : event_ends[e - 1] + 1; }
  int event_end(int e) const { return event_ends[e]; }

  void validate() const;
};

/// Affine map of a fitted [lo, hi] range onto [-1, 1].
struct Normalizer {
  double lo = 0.0;
  double hi = 1.0;

  double apply(double x) const { return 2.0 * (x - lo) / (hi - lo) - 1.0; }
  double invert(double y) const { return lo + (y + 1.0) * (hi - lo) / 2.0; }
  Vector apply(const Vector& x) const;
  Vector invert(const Vector& y) const;
};

Normalizer fit_normalizer(const Vector& reference);

/// Per-channel normalizers, fitted on the training range only.
struct SeriesNormalizer {
  Normalizer input;
  Normalizer output;
};

SeriesNormalizer fit_series_normalizer(const EventSeries& series, int n_fit_samples);
EventSeries normalize(const EventSeries& series, const SeriesNormalizer& norm);

struct GenConfig {
  int n_events = 32;
  int samples_per_event = 200;
  std::uint64_t seed = 0;
  std::optional<std::vector<int>> anomaly_events;  // default: two events before the last
  double anomaly_gain = 1.5;
  double failure_spike = 3.56;  // normalized units, placed in the final event
  int jump_rate = 3;            // abrupt level shifts per event

  std::vector<int> resolved_anomaly_events() const;
  void validate() const;
};

/// Synthetic engine-like data plus its clean input->output law (used by the
/// generator's self-tests).
struct EngineData {
  EventSeries series;
  std::function<double(double)> clean_map;
};

EngineData gen_engine_like_full(const GenConfig& config);
EventSeries gen_engine_like(const GenConfig& config);

/// Equally spaced sinc samples: y = sin(pi x) / (pi x), y(0) = 1.
Batch gen_sinc(int n_points = 100, double half_range = 4.0);

std::pair<std::vector<int>, std::vector<int>> event_sample_ranges(
    const EventSeries& series);

/// (train, test) = (events [0, n_train_events), remainder), sample-exact.
std::pair<EventSeries, EventSeries> split_by_events(const EventSeries& series,
                                                    int n_train_events);

/// Overlapping windows as rows.
Matrix window(const Vector& series, int width, int stride);

/// Averages overlapping window rows back to a per-sample sequence of the
/// given length. Samples covered by no window are zero.
Vector dewindow(const Matrix& windows, int stride, int length);

/// Per-sample mean absolute reconstruction error across covering windows.
Vector window_abs_error(const Matrix& windows, const Matrix& recon, int stride,
                        int length);

// CSV schema: header `index,input,output,event_end`
EventSeries load_series_csv(std::istream& in, const std::string& name = "");
EventSeries load_series_csv(const std::string& path);
void save_series_csv(const EventSeries& series, std::ostream& out);
void save_series_csv(const EventSeries& series, const std::string& path);

}  // namespace nnlm
