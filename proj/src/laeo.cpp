#include "hhpnet/laeo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hhpnet::laeo {

namespace {

// Cosine between a projected head direction and the vector towards the other head.
std::optional<double> facing_cosine(double ux, double uy, double u_norm, const PoseEstimate& estimate) {
  const PlaneVector h = project_direction(estimate.pose);
  const double h_norm = std::sqrt(h.x * h.x + h.y * h.y);
  if (h_norm == 0.0) return std::nullopt;
  return std::clamp((ux * h.x + uy * h.y) / (u_norm * h_norm), -1.0, 1.0);
}

double centroid_distance(const Point2& a, const Point2& b, double& ux, double& uy) {
  ux = b.x - a.x;
  uy = b.y - a.y;
  const double norm = std::sqrt(ux * ux + uy * uy);
  if (norm == 0.0) throw std::domain_error("laeo: coincident head centroids");
  return norm;
}

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

int uncertainty_weight(double s_yaw, double s_pitch, const Gate& gate) {
  const double s = 0.5 * (s_yaw + s_pitch);
  const bool above_floor = gate.interval == GateInterval::OpenBelow || s >= 0.0;
  return (above_floor && s <= gate.delta) ? 1 : 0;
}

Interaction interaction_measure(const HeadInstance& a, const HeadInstance& b) {
  double ux = 0.0, uy = 0.0;
  const double u_norm = centroid_distance(a.centroid, b.centroid, ux, uy);
  const auto ca = facing_cosine(ux, uy, u_norm, a.estimate);
  const auto cb = facing_cosine(-ux, -uy, u_norm, b.estimate);
  if (!ca || !cb) throw std::domain_error("laeo: zero projected head direction");
  return {*ca, *cb};
}

double laeo_value(const Interaction& m, int w_a, int w_b) {
  if (w_a + w_b == 0) return 0.0;
  return (w_a * m.cos_a + w_b * m.cos_b) / (w_a + w_b);
}

bool classify(double value, double tau) { return value >= tau; }

LaeoResult score_pair(const HeadInstance& a, const HeadInstance& b, double tau, const Gate& gate) {
  double ux = 0.0, uy = 0.0;
  const double u_norm = centroid_distance(a.centroid, b.centroid, ux, uy);
  const Interaction m{facing_cosine(ux, uy, u_norm, a.estimate).value_or(0.0),
                      facing_cosine(-ux, -uy, u_norm, b.estimate).value_or(0.0)};
  LaeoResult r;
  r.id_a = a.id;
  r.id_b = b.id;
  r.cos_a = m.cos_a;
  r.cos_b = m.cos_b;
  r.w_a = uncertainty_weight(a.estimate.log_var[0], a.estimate.log_var[1], gate);
  r.w_b = uncertainty_weight(b.estimate.log_var[0], b.estimate.log_var[1], gate);
  r.value = laeo_value(m, r.w_a, r.w_b);
  r.is_laeo = (r.w_a + r.w_b > 0) && classify(r.value, tau);
  return r;
}

std::vector<ScoredPair> score_frames(std::span<const Frame> frames, double tau, const Gate& gate) {
  std::vector<ScoredPair> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Frame& frame = frames[f];
    std::set<std::string> ids;
    for (const auto& h : frame.heads) ids.insert(h.id);
    std::set<std::pair<std::string, std::string>> positives;
    for (const auto& [a, b] : frame.laeo_pairs) {
      if (!ids.count(a) || !ids.count(b)) {
        throw std::invalid_argument("frame " + frame.frame_id + ": labeled pair (" + a + ", " + b +
                                    ") references an undeclared head");
      }
      positives.insert(ordered(a, b));
    }
    for (std::size_t i = 0; i < frame.heads.size(); ++i) {
      for (std::size_t j = i + 1; j < frame.heads.size(); ++j) {
        ScoredPair p{f, score_pair(frame.heads[i], frame.heads[j], tau, gate), false};
        p.label = positives.count(ordered(frame.heads[i].id, frame.heads[j].id)) > 0;
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

double average_precision(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("average_precision: length mismatch");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) return 0.0;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // One operating point per distinct score.
  std::vector<double> precision, recall;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] ? 1 : 0;
      ++seen;
      ++i;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  // Interpolate: precision at recall r is the best precision at any recall >= r.
  for (std::size_t i = precision.size() - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

Report evaluate_laeo(std::span<const Frame> frames, double tau, const Gate& gate) {
  Report report{score_frames(frames, tau, gate), {}};
  Metrics& m = report.metrics;
  std::vector<double> scores;
  std::vector<bool> labels;
  std::size_t predicted = 0;
  for (const auto& p : report.pairs) {
    scores.push_back(p.result.value);
    labels.push_back(p.label);
    m.positives += p.label ? 1 : 0;
    if (p.result.is_laeo) {
      ++predicted;
      if (p.label) ++m.true_positives;
      else ++m.false_positives;
    }
  }
  m.pairs = report.pairs.size();
  m.precision = predicted ? static_cast<double>(m.true_positives) / static_cast<double>(predicted) : 0.0;
  m.recall = m.positives ? static_cast<double>(m.true_positives) / static_cast<double>(m.positives) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.ap = average_precision(scores, labels);
  return report;
}

}  // namespace hhpnet::laeo
