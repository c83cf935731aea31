#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/model.hpp"
#include "pixbis/pipeline.hpp"
#include "pixbis/synth.hpp"
#include "pixbis/train.hpp"

namespace pixbis {

/// Flat key=value settings for the whole experiment. The defaults reproduce
/// the desk-scale reference run end to end; unknown keys are rejected.
struct RunConfig {
  GeneratorConfig gen;
  ModelConfig model;
  TrainConfig train;
  BaselineConfig baseline;
  std::string protocol = "grandtest";
  uint64_t seed = 7;

  void set(const std::string& key, const std::string& value);
  void finalize() {
    gen.seed = seed;
    train.seed = seed;
    baseline.seed = seed;
    train.lambda = model.lambda;
    gen.validate();
    model.validate();
    train.validate();
  }

  static std::string documented_keys();
};

namespace detail {

inline int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not an integer");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
  }
}

inline uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + v +
                                "' is not a non-negative integer");
  }
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::to_double;
  using detail::to_int;
  using detail::to_u64;
  if (key == "gen.size") gen.image_size = to_int(key, value);
  else if (key == "gen.subjects") gen.subjects = to_int(key, value);
  else if (key == "gen.bonafide_videos") gen.bonafide_videos = to_int(key, value);
  else if (key == "gen.attack_videos") gen.attack_videos = to_int(key, value);
  else if (key == "gen.frames") gen.frames_per_video = to_int(key, value);
  else if (key == "gen.strength.print_halftone") gen.strength_print_halftone = to_double(key, value);
  else if (key == "gen.strength.replay_moire") gen.strength_replay_moire = to_double(key, value);
  else if (key == "gen.strength.replay_banding") gen.strength_replay_banding = to_double(key, value);
  else if (key == "gen.strength.print_colorcast") gen.strength_print_colorcast = to_double(key, value);
  else if (key == "model.input") model.input_h = model.input_w = to_int(key, value);
  else if (key == "model.stem") model.stem_channels = to_int(key, value);
  else if (key == "model.growth") model.growth_rate = to_int(key, value);
  else if (key == "model.block1") model.block1_layers = to_int(key, value);
  else if (key == "model.block2") model.block2_layers = to_int(key, value);
  else if (key == "model.compression") model.compression = to_double(key, value);
  else if (key == "model.bottleneck") model.bottleneck_factor = to_int(key, value);
  else if (key == "lambda") model.lambda = to_double(key, value);
  else if (key == "train.lr") train.lr = to_double(key, value);
  else if (key == "train.weight_decay") train.weight_decay = to_double(key, value);
  else if (key == "train.batch") train.batch_size = to_int(key, value);
  else if (key == "train.epochs") train.epochs = to_int(key, value);
  else if (key == "train.flip_prob") train.flip_prob = to_double(key, value);
  else if (key == "train.jitter") train.jitter_range = to_double(key, value);
  else if (key == "baseline.l2") baseline.l2 = to_double(key, value);
  else if (key == "baseline.epochs") baseline.epochs = to_int(key, value);
  else if (key == "baseline.lr") baseline.lr = to_double(key, value);
  else if (key == "protocol") protocol = value;
  else if (key == "seed") seed = to_u64(key, value);
  else
    throw std::invalid_argument("unknown config key '" + key + "'\nknown keys:\n" +
                                documented_keys());
}

inline std::string RunConfig::documented_keys() {
  return "  gen.size gen.subjects gen.bonafide_videos gen.attack_videos gen.frames\n"
         "  gen.strength.print_halftone gen.strength.replay_moire\n"
         "  gen.strength.replay_banding gen.strength.print_colorcast\n"
         "  model.input model.stem model.growth model.block1 model.block2\n"
         "  model.compression model.bottleneck lambda\n"
         "  train.lr train.weight_decay train.batch train.epochs train.flip_prob train.jitter\n"
         "  baseline.l2 baseline.epochs baseline.lr\n"
         "  protocol seed\n";
}

/// key=value lines; '#' starts a comment; blank lines ignored.
inline void load_run_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("'" + path + "' line " + std::to_string(line_no) +
                                  ": expected key=value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("'" + path + "' line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
  }
}

}  // namespace pixbis
