#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/rng.hpp"
#include "pixbis/types.hpp"

namespace pixbis {

/// One image frame of one video.
struct Sample {
  std::string path;  // relative to the manifest's directory
  Label label = Label::kBonafide;
  Pai pai = Pai::kNone;
  std::string video_id;
  int frame_index = 0;
  Split split = Split::kTrain;
};

/// Catalog of a dataset on disk.
struct Manifest {
  std::vector<Sample> samples;
  std::string name;
  std::string root;  // directory holding manifest.csv and the images
  uint64_t config_hash = 0;

  std::vector<Sample> split_samples(Split s) const {
    std::vector<Sample> out;
    for (const auto& sample : samples)
      if (sample.split == s) out.push_back(sample);
    return out;
  }
};

inline constexpr const char* kManifestHeader = "path,split,label,pai,video_id,frame_index";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline void validate_sample(const Sample& s, const std::string& context) {
  if ((s.label == Label::kBonafide) != (s.pai == Pai::kNone))
    throw std::runtime_error(context + ": label '" + to_string(s.label) +
                             "' inconsistent with pai '" + to_string(s.pai) + "'");
  if (s.frame_index < 0) throw std::runtime_error(context + ": negative frame index");
  if (s.path.empty() || s.video_id.empty())
    throw std::runtime_error(context + ": empty path or video id");
}

}  // namespace detail

inline void validate_manifest(const Manifest& m) {
  std::set<std::pair<std::string, int>> seen;
  std::map<std::string, Split> video_split;
  for (size_t i = 0; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    detail::validate_sample(s, "manifest row " + std::to_string(i + 1));
    if (!seen.emplace(s.video_id, s.frame_index).second)
      throw std::runtime_error("manifest: duplicate (video_id, frame_index) = (" + s.video_id +
                               ", " + std::to_string(s.frame_index) + ")");
    auto [it, inserted] = video_split.emplace(s.video_id, s.split);
    if (!inserted && it->second != s.split)
      throw std::runtime_error("manifest: video '" + s.video_id + "' spans multiple splits");
  }
}

inline void write_manifest(const Manifest& m, const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.csv").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kManifestHeader << "\n";
  for (const auto& s : m.samples)
    out << s.path << ',' << to_string(s.split) << ',' << to_string(s.label) << ','
        << to_string(s.pai) << ',' << s.video_id << ',' << s.frame_index << "\n";
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

inline Manifest read_manifest(const std::string& dir) {
  const auto root = std::filesystem::path(dir);
  const std::string path = (root / "manifest.csv").string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Manifest m;
  m.name = root.filename().string().empty() ? root.parent_path().filename().string()
                                            : root.filename().string();
  m.root = dir;
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw std::runtime_error("'" + path + "': bad or missing header (expected '" +
                             std::string(kManifestHeader) + "')");
  int line_no = 1;
  std::string content = line + "\n";
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    content += line + "\n";
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) +
                               ": expected 6 fields, got " + std::to_string(fields.size()));
    Sample s;
    const std::string context = "'" + path + "' line " + std::to_string(line_no);
    try {
      s.path = fields[0];
      s.split = split_from_string(fields[1]);
      s.label = label_from_string(fields[2]);
      s.pai = pai_from_string(fields[3]);
      s.video_id = fields[4];
      s.frame_index = std::stoi(fields[5]);
    } catch (const std::exception& e) {
      throw std::runtime_error(context + ": " + e.what());
    }
    detail::validate_sample(s, context);
    m.samples.push_back(std::move(s));
  }
  validate_manifest(m);
  m.config_hash = fnv1a64(content);
  return m;
}

/// Uniform frame selection: round(i*(T-1)/(n-1)) for i in 0..n-1 when T >= n;
/// every frame when T < n. Output is sorted and unique, and includes the first
/// and last frame.
inline std::vector<int> select_frames(int total, int n) {
  if (n < 1) throw std::invalid_argument("select_frames: n must be >= 1");
  if (total < 1) throw std::invalid_argument("select_frames: empty frame list");
  std::vector<int> out;
  if (total <= n) {
    out.resize(total);
    for (int i = 0; i < total; ++i) out[i] = i;
    return out;
  }
  if (n == 1) return {0};
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(static_cast<int>(
        std::llround(static_cast<double>(i) * (total - 1) / (n - 1))));
  return out;
}

/// Per-split PAI filters. Bonafide samples always pass.
struct ProtocolSpec {
  std::string name;
  std::set<Pai> train_pais;
  std::set<Pai> dev_pais;
  std::set<Pai> eval_pais;
  std::string purpose;  // grandtest | unseen-attack | cross
};

inline ProtocolSpec builtin_protocol(const std::string& name) {
  std::set<Pai> all(kAttackPais.begin(), kAttackPais.end());
  if (name == "grandtest") return ProtocolSpec{name, all, all, all, "grandtest"};
  if (name == "unseen-replay") {
    std::set<Pai> seen = all;
    seen.erase(Pai::kReplayBanding);
    return ProtocolSpec{name, seen, seen, all, "unseen-attack"};
  }
  throw std::invalid_argument("unknown protocol '" + name + "' (built-ins: grandtest, unseen-replay)");
}

struct SplitView {
  std::vector<Sample> train;
  std::vector<Sample> dev;
  std::vector<Sample> eval;
};

inline SplitView apply_protocol(const Manifest& m, const ProtocolSpec& spec) {
  SplitView view;
  auto keep = [](const Sample& s, const std::set<Pai>& allowed) {
    return s.label == Label::kBonafide || allowed.count(s.pai) > 0;
  };
  for (const auto& s : m.samples) {
    switch (s.split) {
      case Split::kTrain:
        if (keep(s, spec.train_pais)) view.train.push_back(s);
        break;
      case Split::kDev:
        if (keep(s, spec.dev_pais)) view.dev.push_back(s);
        break;
      case Split::kEval:
        if (keep(s, spec.eval_pais)) view.eval.push_back(s);
        break;
    }
  }
  if (spec.purpose == "unseen-attack") {
    std::set<Pai> eval_only;
    for (const auto& s : view.eval)
      if (s.label == Label::kAttack && spec.train_pais.count(s.pai) == 0) eval_only.insert(s.pai);
    if (eval_only.empty())
      throw std::runtime_error("protocol '" + spec.name +
                               "': eval split contains no PAI unseen in training");
  }
  if (view.train.empty() || view.dev.empty() || view.eval.empty())
    throw std::runtime_error("protocol '" + spec.name + "' leaves an empty split");
  return view;
}

/// Cross-dataset pairing: train/dev from A, eval from B.
inline SplitView apply_cross(const Manifest& a, const Manifest& b) {
  SplitView view;
  view.train = a.split_samples(Split::kTrain);
  view.dev = a.split_samples(Split::kDev);
  view.eval = b.split_samples(Split::kEval);
  if (view.train.empty() || view.dev.empty() || view.eval.empty())
    throw std::runtime_error("cross protocol leaves an empty split");
  return view;
}

}  // namespace pixbis
