#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/baselines.hpp"
#include "pixbis/dataset.hpp"
#include "pixbis/metrics.hpp"
#include "pixbis/model.hpp"
#include "pixbis/train.hpp"

namespace pixbis {

struct SplitScores {
  std::vector<ScoreRecord> frames;
  std::vector<ScoreRecord> videos;
};

namespace detail {

/// Samples grouped per video, frames sorted by index, videos sorted by id.
inline std::vector<std::vector<Sample>> group_videos(const std::vector<Sample>& samples) {
  std::map<std::string, std::vector<Sample>> by_video;
  for (const auto& s : samples) by_video[s.video_id].push_back(s);
  std::vector<std::vector<Sample>> out;
  out.reserve(by_video.size());
  for (auto& [id, frames] : by_video) {
    std::sort(frames.begin(), frames.end(),
              [](const Sample& a, const Sample& b) { return a.frame_index < b.frame_index; });
    out.push_back(std::move(frames));
  }
  return out;
}

}  // namespace detail

/// Scores every video of a split with a frozen model: uniform frame selection,
/// eval-mode forward, map mean per frame, frame means per video.
inline SplitScores score_split(Model& model, const std::string& data_root,
                               const std::vector<Sample>& samples, int frames_per_video) {
  model.set_train(false);
  const int h = model.config.input_h, w = model.config.input_w;
  SplitScores out;
  for (const auto& video : detail::group_videos(samples)) {
    const auto picks = select_frames(static_cast<int>(video.size()), frames_per_video);
    auto batch = make_tensor<float>({static_cast<int>(picks.size()), 3, h, w});
    for (size_t i = 0; i < picks.size(); ++i)
      detail::fill_batch_slot(*batch, static_cast<int>(i),
                              preprocess(load_sample_image(data_root, video[picks[i]]), h, w));
    Graph g;
    const auto fwd = model.forward(g, batch);
    const auto scores = frame_scores(*fwd.map);
    for (size_t i = 0; i < picks.size(); ++i) {
      const Sample& s = video[picks[i]];
      out.frames.push_back(
          {s.video_id, s.label, s.pai, static_cast<float>(scores[i])});
    }
  }
  out.videos = aggregate_video_scores(out.frames);
  return out;
}

enum class BaselineKind { kLbp, kIqm };

inline BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "lbp") return BaselineKind::kLbp;
  if (s == "iqm") return BaselineKind::kIqm;
  throw std::invalid_argument("unknown baseline kind '" + s + "' (lbp or iqm)");
}

inline std::vector<double> baseline_features(BaselineKind kind, const Image& img) {
  return kind == BaselineKind::kLbp ? uniform_lbp_histogram(to_grayscale(img))
                                    : iqm_features(img);
}

struct BaselineScores {
  LinearModel model;
  SplitScores dev;
  SplitScores eval;
};

struct BaselineConfig {
  double l2 = 1e-3;
  int epochs = 400;
  double lr = 0.5;
  uint64_t seed = 7;
};

/// Handcrafted-feature baseline: per-frame features on the training split fit
/// a logistic model; dev and eval frames are scored and averaged per video.
inline BaselineScores run_baseline(BaselineKind kind, const SplitView& view,
                                   const std::string& data_root, int frames_per_video,
                                   const BaselineConfig& cfg) {
  std::vector<std::vector<double>> train_x;
  std::vector<int> train_y;
  for (const auto& video : detail::group_videos(view.train)) {
    const auto picks = select_frames(static_cast<int>(video.size()), frames_per_video);
    for (int p : picks) {
      train_x.push_back(baseline_features(kind, load_sample_image(data_root, video[p])));
      train_y.push_back(video[p].label == Label::kBonafide ? 1 : 0);
    }
  }
  BaselineScores out;
  out.model = linear_train(train_x, train_y, cfg.l2, cfg.epochs, cfg.lr, cfg.seed);

  auto score = [&](const std::vector<Sample>& samples) {
    SplitScores scores;
    for (const auto& video : detail::group_videos(samples)) {
      const auto picks = select_frames(static_cast<int>(video.size()), frames_per_video);
      for (int p : picks) {
        const Sample& s = video[p];
        const double v =
            linear_score(out.model, baseline_features(kind, load_sample_image(data_root, s)));
        scores.frames.push_back({s.video_id, s.label, s.pai, static_cast<float>(v)});
      }
    }
    scores.videos = aggregate_video_scores(scores.frames);
    return scores;
  };
  out.dev = score(view.dev);
  out.eval = score(view.eval);
  return out;
}

/// Optional inspection dump: video_id,frame_index,f0..f{D-1}.
inline void write_feature_dump(BaselineKind kind, const std::vector<Sample>& samples,
                               const std::string& data_root, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const int dim = kind == BaselineKind::kLbp ? kLbpDim : kIqmDim;
  out << "video_id,frame_index";
  for (int d = 0; d < dim; ++d) out << ",f" << d;
  out << "\n";
  char buf[32];
  for (const auto& s : samples) {
    out << s.video_id << ',' << s.frame_index;
    for (const double v : baseline_features(kind, load_sample_image(data_root, s))) {
      std::snprintf(buf, sizeof(buf), ",%.9g", v);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace pixbis
