#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/types.hpp"

namespace pixbis {

/// One scored presentation. Higher score means more bonafide. Scores are kept
/// in float precision so the 9-significant-digit CSV round-trips exactly.
struct ScoreRecord {
  std::string video_id;
  Label label = Label::kBonafide;
  Pai pai = Pai::kNone;
  float score = 0.0f;

  bool operator==(const ScoreRecord&) const = default;
};

struct MetricsReport {
  double threshold = 0.0;
  double eer_dev = 0.0;
  std::vector<std::pair<Pai, double>> apcer_per_pai;
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double hter = 0.0;
};

namespace detail {

inline void require_both_classes(const std::vector<ScoreRecord>& records, const char* who) {
  bool bona = false, attack = false;
  for (const auto& r : records) (r.label == Label::kBonafide ? bona : attack) = true;
  if (!bona || !attack)
    throw std::runtime_error(std::string(who) + ": records must contain both classes");
}

}  // namespace detail

/// One record per video, score = mean of its frame scores.
inline std::vector<ScoreRecord> aggregate_video_scores(const std::vector<ScoreRecord>& frames) {
  std::map<std::string, std::pair<ScoreRecord, std::pair<double, int>>> acc;
  std::vector<std::string> order;
  for (const auto& f : frames) {
    auto it = acc.find(f.video_id);
    if (it == acc.end()) {
      acc.emplace(f.video_id, std::make_pair(f, std::make_pair(double(f.score), 1)));
      order.push_back(f.video_id);
    } else {
      if (it->second.first.label != f.label || it->second.first.pai != f.pai)
        throw std::runtime_error("aggregate_video_scores: inconsistent label or pai within video '" +
                                 f.video_id + "'");
      it->second.second.first += f.score;
      it->second.second.second += 1;
    }
  }
  std::vector<ScoreRecord> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& [rec, sums] = acc.at(id);
    rec.score = static_cast<float>(sums.first / sums.second);
    out.push_back(rec);
  }
  return out;
}

/// Acceptance rule: score >= threshold is accepted as bonafide.
/// far = accepted attacks / attacks, frr = rejected bonafide / bonafide.
inline std::pair<double, double> far_frr(const std::vector<ScoreRecord>& records, double tau) {
  detail::require_both_classes(records, "far_frr");
  int64_t attacks = 0, accepted_attacks = 0, bona = 0, rejected_bona = 0;
  for (const auto& r : records) {
    if (r.label == Label::kAttack) {
      ++attacks;
      if (r.score >= tau) ++accepted_attacks;
    } else {
      ++bona;
      if (r.score < tau) ++rejected_bona;
    }
  }
  return {static_cast<double>(accepted_attacks) / attacks,
          static_cast<double>(rejected_bona) / bona};
}

inline double hter_at(const std::vector<ScoreRecord>& records, double tau) {
  const auto [far, frr] = far_frr(records, tau);
  return (far + frr) / 2.0;
}

/// Candidate thresholds: midpoints between consecutive distinct scores plus a
/// below-min and above-max sentinel.
inline std::vector<double> threshold_candidates(const std::vector<ScoreRecord>& records) {
  if (records.empty()) throw std::runtime_error("threshold_candidates: no records");
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.score))
      throw std::runtime_error("threshold_candidates: non-finite score for video '" +
                               r.video_id + "'");
    scores.push_back(r.score);
  }
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> out;
  out.reserve(scores.size() + 1);
  out.push_back(scores.front() - 1.0);
  for (size_t i = 0; i + 1 < scores.size(); ++i) out.push_back((scores[i] + scores[i + 1]) / 2.0);
  out.push_back(scores.back() + 1.0);
  return out;
}

struct EerResult {
  double threshold = 0.0;
  double eer = 0.0;
};

/// Sweep all candidates; minimize |far - frr|, breaking ties by smaller
/// (far+frr)/2 and then by lower threshold.
inline EerResult eer_threshold(const std::vector<ScoreRecord>& records) {
  detail::require_both_classes(records, "eer_threshold");
  EerResult best;
  double best_gap = 2.0, best_mean = 2.0;
  for (const double tau : threshold_candidates(records)) {
    const auto [far, frr] = far_frr(records, tau);
    const double gap = std::abs(far - frr);
    const double mean = (far + frr) / 2.0;
    if (gap < best_gap || (gap == best_gap && mean < best_mean)) {
      best_gap = gap;
      best_mean = mean;
      best = {tau, mean};
    }
  }
  return best;
}

struct RocPoint {
  double threshold;
  double far;
  double frr;
};

inline std::vector<RocPoint> roc_points(const std::vector<ScoreRecord>& records) {
  detail::require_both_classes(records, "roc_points");
  std::vector<RocPoint> out;
  for (const double tau : threshold_candidates(records)) {
    const auto [far, frr] = far_frr(records, tau);
    out.push_back({tau, far, frr});
  }
  return out;
}

struct ApcerResult {
  std::vector<std::pair<Pai, double>> per_pai;
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
};

/// APCER per PAI (fraction of that PAI accepted as bonafide at tau), APCER as
/// the worst PAI, BPCER as the bonafide rejection rate, ACER as their mean.
inline ApcerResult apcer_bpcer_acer(const std::vector<ScoreRecord>& records, double tau) {
  detail::require_both_classes(records, "apcer_bpcer_acer");
  std::map<Pai, std::pair<int64_t, int64_t>> per;  // pai -> (accepted, total)
  int64_t bona = 0, rejected_bona = 0;
  for (const auto& r : records) {
    if (r.label == Label::kAttack) {
      auto& [acc, total] = per[r.pai];
      ++total;
      if (r.score >= tau) ++acc;
    } else {
      ++bona;
      if (r.score < tau) ++rejected_bona;
    }
  }
  if (per.empty()) throw std::runtime_error("apcer_bpcer_acer: no attack records");
  ApcerResult res;
  for (const auto& [pai, counts] : per) {
    const double rate = static_cast<double>(counts.first) / counts.second;
    res.per_pai.emplace_back(pai, rate);
    res.apcer = std::max(res.apcer, rate);
  }
  res.bpcer = static_cast<double>(rejected_bona) / bona;
  res.acer = (res.apcer + res.bpcer) / 2.0;
  return res;
}

/// Threshold and EER from the development records, every rate on the
/// evaluation records at that threshold.
inline MetricsReport evaluate_at_dev_threshold(const std::vector<ScoreRecord>& dev,
                                               const std::vector<ScoreRecord>& eval) {
  const EerResult dev_eer = eer_threshold(dev);
  MetricsReport report;
  report.threshold = dev_eer.threshold;
  report.eer_dev = dev_eer.eer;
  const auto iso = apcer_bpcer_acer(eval, dev_eer.threshold);
  report.apcer_per_pai = iso.per_pai;
  report.apcer = iso.apcer;
  report.bpcer = iso.bpcer;
  report.acer = iso.acer;
  const auto [far, frr] = far_frr(eval, dev_eer.threshold);
  report.far = far;
  report.frr = frr;
  report.hter = (far + frr) / 2.0;
  return report;
}

inline constexpr const char* kScoreHeader = "video_id,label,pai,score";

inline void write_scores(const std::vector<ScoreRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kScoreHeader << "\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(r.score));
    out << r.video_id << ',' << to_string(r.label) << ',' << to_string(r.pai) << ',' << buf
        << "\n";
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

inline std::vector<ScoreRecord> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kScoreHeader)
    throw std::runtime_error("'" + path + "': bad or missing header (expected '" +
                             std::string(kScoreHeader) + "')");
  std::vector<ScoreRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    const std::string context = "'" + path + "' line " + std::to_string(line_no);
    if (fields.size() != 4)
      throw std::runtime_error(context + ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    ScoreRecord r;
    try {
      r.video_id = fields[0];
      r.label = label_from_string(fields[1]);
      r.pai = pai_from_string(fields[2]);
      r.score = std::stof(fields[3]);
    } catch (const std::exception& e) {
      throw std::runtime_error(context + ": " + e.what());
    }
    if (!std::isfinite(r.score)) throw std::runtime_error(context + ": non-finite score");
    if ((r.label == Label::kBonafide) != (r.pai == Pai::kNone))
      throw std::runtime_error(context + ": label '" + fields[1] + "' inconsistent with pai '" +
                               fields[2] + "'");
    out.push_back(std::move(r));
  }
  return out;
}

/// Report as key: value text. Rates are percentages with two decimals; the
/// threshold keeps full precision. Extra lines (provenance, notes) go first.
inline std::string format_report_text(const MetricsReport& r,
                                      const std::vector<std::pair<std::string, std::string>>&
                                          extra = {}) {
  std::ostringstream os;
  char buf[64];
  auto pct = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
    return std::string(buf);
  };
  for (const auto& [k, v] : extra) os << k << ": " << v << "\n";
  std::snprintf(buf, sizeof(buf), "%.9g", r.threshold);
  os << "threshold: " << buf << "\n";
  os << "eer_dev: " << pct(r.eer_dev) << "\n";
  for (const auto& [pai, rate] : r.apcer_per_pai)
    os << "apcer_" << to_string(pai) << ": " << pct(rate) << "\n";
  os << "apcer: " << pct(r.apcer) << "\n";
  os << "bpcer: " << pct(r.bpcer) << "\n";
  os << "acer: " << pct(r.acer) << "\n";
  os << "far: " << pct(r.far) << "\n";
  os << "frr: " << pct(r.frr) << "\n";
  os << "hter: " << pct(r.hter) << "\n";
  return os.str();
}

/// Same report as metric,value CSV rows (rates as unrounded fractions).
inline std::string format_report_csv(const MetricsReport& r,
                                     const std::vector<std::pair<std::string, std::string>>&
                                         extra = {}) {
  std::ostringstream os;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  os << "metric,value\n";
  for (const auto& [k, v] : extra) os << k << ',' << v << "\n";
  os << "threshold," << num(r.threshold) << "\n";
  os << "eer_dev," << num(r.eer_dev) << "\n";
  for (const auto& [pai, rate] : r.apcer_per_pai)
    os << "apcer_" << to_string(pai) << ',' << num(rate) << "\n";
  os << "apcer," << num(r.apcer) << "\n";
  os << "bpcer," << num(r.bpcer) << "\n";
  os << "acer," << num(r.acer) << "\n";
  os << "far," << num(r.far) << "\n";
  os << "frr," << num(r.frr) << "\n";
  os << "hter," << num(r.hter) << "\n";
  return os.str();
}

inline void write_roc_csv(const std::vector<RocPoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "threshold,far,frr\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.threshold, p.far, p.frr);
    out << buf;
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

}  // namespace pixbis
