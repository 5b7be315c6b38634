#include "nnlm/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace nnlm {

using json = nlohmann::ordered_json;

void ResidualSeries::validate() const {
  if (values.size() == 0) throw std::invalid_argument("ResidualSeries: empty");
  if (event_ends.empty() || event_ends.back() != values.size() - 1)
    throw std::invalid_argument("ResidualSeries: events do not partition the series");
  const bool on_boundary =
      train_boundary == 0 ||
      std::find(event_ends.begin(), event_ends.end(), train_boundary - 1) !=
          event_ends.end();
  if (train_boundary < 0 || train_boundary > values.size() || !on_boundary)
    throw std::invalid_argument("ResidualSeries: train_boundary must sit on an event boundary");
}

ResidualSeries residual_series(const Network& net, const EventSeries& series,
                               int train_boundary) {
  series.validate();
  if (net.spec.input_dim != 1 || net.spec.output_dim != 1)
    throw std::invalid_argument("residual_series: expects a 1-in 1-out regressor");
  Matrix yhat = forward(net, series.input);
  ResidualSeries res;
  res.values = series.output - yhat.col(0);
  res.event_ends = series.event_ends;
  res.train_boundary = train_boundary;
  res.validate();
  return res;
}

ResidualSeries autoencoder_residual_series(const Network& net,
                                           const EventSeries& series, int stride,
                                           int train_boundary) {
  series.validate();
  const int width = net.spec.input_dim;
  if (net.spec.mode != NetMode::autoencoder)
    throw std::invalid_argument("autoencoder_residual_series: not an autoencoder model");
  Matrix windows = window(series.output, width, stride);
  Matrix recon = forward(net, windows);
  ResidualSeries res;
  res.values = window_abs_error(windows, recon, stride, series.size());
  res.event_ends = series.event_ends;
  res.train_boundary = train_boundary;
  res.validate();
  return res;
}

std::vector<EventStats> per_event_stats(const ResidualSeries& res) {
  res.validate();
  std::vector<EventStats> stats;
  stats.reserve(res.event_ends.size());
  for (int e = 0; e < res.n_events(); ++e) {
    const int begin = res.event_begin(e);
    const int len = res.event_ends[e] - begin + 1;
    auto seg = res.values.segment(begin, len);
    stats.push_back({e, seg.cwiseAbs().maxCoeff(), seg.cwiseAbs().mean(),
                     seg.squaredNorm() / len});
  }
  return stats;
}

AnomalyReport detect(const ResidualSeries& res, double ratio_threshold) {
  res.validate();
  if (res.train_boundary < 1)
    throw std::invalid_argument("detect: empty training region");
  const double train_max = res.values.head(res.train_boundary).cwiseAbs().maxCoeff();
  if (train_max <= 0.0)
    throw std::invalid_argument("detect: train_max is zero (degenerate perfect fit)");

  AnomalyReport report;
  report.train_max = train_max;
  report.ratio_threshold = ratio_threshold;
  for (const EventStats& s : per_event_stats(res)) {
    report.per_event.push_back({s.event, s.max_abs, s.max_abs / train_max});
    const bool test_event = res.event_begin(s.event) >= res.train_boundary;
    if (test_event && s.max_abs / train_max >= ratio_threshold)
      report.flagged_events.insert(s.event);
  }
  return report;
}

ConsensusReport consensus(const std::vector<AnomalyReport>& reports, double quorum) {
  if (reports.size() < 2) throw std::invalid_argument("consensus: need K >= 2 reports");
  if (quorum <= 0.0 || quorum > 1.0)
    throw std::invalid_argument("consensus: quorum must be in (0,1]");
  const std::size_t n_events = reports.front().per_event.size();
  for (const auto& r : reports)
    if (r.per_event.size() != n_events)
      throw std::invalid_argument("consensus: mismatched event structures");

  const int k = static_cast<int>(reports.size());
  const int needed = static_cast<int>(std::ceil(quorum * k));
  std::map<int, int> votes;
  for (const auto& r : reports)
    for (int e : r.flagged_events) ++votes[e];

  ConsensusReport out;
  out.n_runs = k;
  out.quorum = quorum;
  out.runs = reports;
  for (const auto& [event, count] : votes) {
    if (count >= needed)
      out.consensus_events.insert(event);
    else
      out.artefact_events.insert(event);
  }
  return out;
}

static json report_to_json(const AnomalyReport& report) {
  json j;
  j["schema"] = "nnlm-anomaly-report v1";
  j["train_max"] = report.train_max;
  j["ratio_threshold"] = report.ratio_threshold;
  j["model_fingerprint"] = report.model_fingerprint;
  j["per_event"] = json::array();
  for (const auto& e : report.per_event)
    j["per_event"].push_back({{"event", e.event}, {"max_abs", e.max_abs}, {"ratio", e.ratio}});
  j["flagged_events"] = report.flagged_events;
  return j;
}

void save_anomaly_report(const AnomalyReport& report, std::ostream& out) {
  out << report_to_json(report).dump(2) << "\n";
}

void save_consensus_report(const ConsensusReport& report, std::ostream& out) {
  json j;
  j["schema"] = "nnlm-consensus-report v1";
  j["n_runs"] = report.n_runs;
  j["quorum"] = report.quorum;
  j["consensus_events"] = report.consensus_events;
  j["artefact_events"] = report.artefact_events;
  j["runs"] = json::array();
  for (const auto& r : report.runs) j["runs"].push_back(report_to_json(r));
  out << j.dump(2) << "\n";
}

void save_residual_csv(const ResidualSeries& res, std::ostream& out) {
  res.validate();
  out << "index,residual,event,region\n";
  int event = 0;
  for (int i = 0; i < res.values.size(); ++i) {
    if (i > res.event_ends[event]) ++event;
    out << i << "," << res.values(i) << "," << event << ","
        << (i < res.train_boundary ? "train" : "test") << "\n";
  }
}

}  // namespace nnlm
