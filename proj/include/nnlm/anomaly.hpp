#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "nnlm/network.hpp"
#include "nnlm/timeseries.hpp"

namespace nnlm {

/// Per-sample prediction error y - yhat over the full series, normalized
/// units. train_boundary is the index of the first test sample and must
/// coincide with an event boundary.
struct ResidualSeries {
  Vector values;
  std::vector<int> event_ends;
  int train_boundary = 0;

  int n_events() const { return static_cast<int>(event_ends.size()); }
  int event_begin(int e) const { return e == 0 ? 0 : event_ends[e - 1] + 1; }
  void validate() const;
};

struct EventStats {
  int event;
  double max_abs;
  double mean_abs;
  double mse;
};

struct EventRatio {
  int event;
  double max_abs;
  double ratio;  // max_abs / train_max
};

struct AnomalyReport {
  double train_max = 0.0;
  std::vector<EventRatio> per_event;
  double ratio_threshold = 2.0;
  std::set<int> flagged_events;  // test-region events with ratio >= threshold
  std::string model_fingerprint;
};

struct ConsensusReport {
  int n_runs = 0;
  double quorum = 0.8;
  std::set<int> consensus_events;  // flagged in >= ceil(quorum * K) runs
  std::set<int> artefact_events;   // flagged somewhere but below quorum
  std::vector<AnomalyReport> runs;
};

ResidualSeries residual_series(const Network& net, const EventSeries& series,
                               int train_boundary);

/// Residuals for an autoencoder over the windowed output channel: per-sample
/// mean absolute reconstruction error across covering windows.
ResidualSeries autoencoder_residual_series(const Network& net,
                                           const EventSeries& series, int stride,
                                           int train_boundary);

std::vector<EventStats> per_event_stats(const ResidualSeries& res);

AnomalyReport detect(const ResidualSeries& res, double ratio_threshold = 2.0);

ConsensusReport consensus(const std::vector<AnomalyReport>& reports, double quorum = 0.8);

void save_anomaly_report(const AnomalyReport& report, std::ostream& out);
void save_consensus_report(const ConsensusReport& report, std::ostream& out);

/// Plot-ready per-sample residual CSV: `index,residual,event,region`.
void save_residual_csv(const ResidualSeries& res, std::ostream& out);

}  // namespace nnlm
