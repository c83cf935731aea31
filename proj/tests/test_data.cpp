#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "pixbis/dataset.hpp"
#include "pixbis/image.hpp"
#include "pixbis/synth.hpp"

using namespace pixbis;
namespace fs = std::filesystem;

namespace {

double mean_abs_diff(const Image& a, const Image& b) {
  double acc = 0;
  for (size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
  return acc / a.data.size();
}

// Luminance spectrum energy in a radial frequency band, by direct DFT of the
// selected bins only.
double band_energy(const Image& img, double f_lo, double f_hi) {
  const int n = img.width;
  std::vector<double> lum(static_cast<size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      lum[static_cast<size_t>(y) * n + x] =
          0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  double energy = 0;
  for (int ky = -n / 2; ky < n / 2; ++ky)
    for (int kx = 0; kx < n / 2; ++kx) {  // half-plane is enough for a real signal
      const double r = std::sqrt(static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
      if (r < f_lo || r > f_hi) continue;
      double re = 0, im = 0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double phase = -2.0 * M_PI * (static_cast<double>(kx) * x + ky * y) / n;
          re += lum[static_cast<size_t>(y) * n + x] * std::cos(phase);
          im += lum[static_cast<size_t>(y) * n + x] * std::sin(phase);
        }
      energy += re * re + im * im;
    }
  return energy;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pixbis_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("ppm round trip preserves quantized pixels") {
  Image img(5, 3);
  Rng rng(2);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  const auto dir = fresh_dir("ppm");
  const std::string path = (dir / "x.ppm").string();
  write_ppm(img, path);
  const Image back = read_ppm(path);
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 3);
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(0.5 / 255.0));
  // Second write/read cycle is lossless once quantized.
  write_ppm(back, path);
  CHECK(read_ppm(path).data == back.data);
  CHECK_THROWS(read_ppm((dir / "missing.ppm").string()));
}

TEST_CASE("preprocess identity, constants, and checkerboard mean") {
  Image img(32, 32);
  Rng rng(3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  const auto t = preprocess(img, 32, 32);
  REQUIRE(t.shape == Shape{3, 32, 32});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        CHECK(t.values[(c * 32 + y) * 32 + x] ==
              doctest::Approx(img.at(x, y, c)).epsilon(1e-6));

  Image flat(40, 24);
  for (auto& v : flat.data) v = 0.25f;
  const auto tf = preprocess(flat, 16, 16);
  for (float v : tf.values) CHECK(v == doctest::Approx(0.25f).epsilon(1e-6));

  Image checker(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) checker.at(x, y, c) = static_cast<float>((x + y) % 2);
  const auto tc = preprocess(checker, 4, 4);
  double mean = 0;
  for (float v : tc.values) mean += v;
  mean /= tc.values.size();
  CHECK(mean == doctest::Approx(0.5).epsilon(1e-3));

  Image tiny(4, 4);
  CHECK_THROWS_AS(preprocess(tiny, 16, 16), std::invalid_argument);
}

TEST_CASE("bonafide rendering is deterministic and subject-dependent") {
  const Image a1 = render_bonafide(7, 64, 0, 0, 3);
  const Image a2 = render_bonafide(7, 64, 0, 0, 3);
  CHECK(a1.data == a2.data);

  const Image b = render_bonafide(7, 64, 1, 0, 3);
  CHECK(mean_abs_diff(a1, b) > 0.01);

  for (float v : a1.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("artifact strength zero is the identity") {
  const Image base = render_bonafide(7, 64, 2, 0, 0);
  for (Pai pai : kAttackPais) {
    Rng rng = Rng::stream(7, "artifact", 0, 0, 0);
    const Image out = apply_attack_artifact(base, pai, 0.0, rng);
    CHECK(out.data == base.data);
  }
  Rng rng(1);
  CHECK_THROWS_AS(apply_attack_artifact(base, Pai::kNone, 0.5, rng), std::invalid_argument);
}

TEST_CASE("attacks differ from their bonafide source and stay in range") {
  const Image base = render_bonafide(7, 64, 3, 1, 2);
  for (Pai pai : kAttackPais) {
    Rng rng = Rng::stream(7, "artifact", 3, static_cast<uint64_t>(pai), 2);
    const Image out = apply_attack_artifact(base, pai, 0.8, rng);
    CHECK(mean_abs_diff(base, out) > 0.0);
    for (float v : out.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("moire artifact raises band spectrum energy at least 3x") {
  // Band covers the moire frequency range size/period for period in [3.8, 5.2].
  double bona = 0, attacked = 0;
  for (int f = 0; f < 3; ++f) {
    const Image base = render_bonafide(7, 64, 4, 0, f);
    Rng rng = Rng::stream(7, "artifact", 4, 1, static_cast<uint64_t>(f));
    const Image out = apply_attack_artifact(base, Pai::kReplayMoire, 0.8, rng);
    bona += band_energy(base, 10.0, 19.0);
    attacked += band_energy(out, 10.0, 19.0);
  }
  INFO("bona band energy ", bona, " attacked ", attacked);
  CHECK(attacked >= 3.0 * bona);
}

TEST_CASE("generate_dataset writes the documented corpus") {
  GeneratorConfig cfg;
  cfg.subjects = 12;
  cfg.bonafide_videos = 1;
  cfg.attack_videos = 2;
  cfg.frames_per_video = 20;
  cfg.image_size = 64;
  cfg.seed = 7;
  const auto dir = fresh_dir("gen720");
  const Manifest m = generate_dataset(cfg, dir.string());
  CHECK(m.samples.size() == 720);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".ppm") ++files;
  CHECK(files == 720);

  // Split subject sets are pairwise disjoint (subject prefix of the video id).
  std::set<std::string> subj[3];
  for (const auto& s : m.samples) subj[static_cast<int>(s.split)].insert(s.video_id.substr(0, 3));
  for (int i = 0; i < 3; ++i) {
    CHECK(!subj[i].empty());
    for (int j = i + 1; j < 3; ++j)
      for (const auto& id : subj[i]) CHECK(subj[j].count(id) == 0);
  }

  // Re-running with the same seed reproduces the manifest bit for bit.
  const auto dir2 = fresh_dir("gen720b");
  generate_dataset(cfg, dir2.string());
  const Manifest r1 = read_manifest(dir.string());
  const Manifest r2 = read_manifest(dir2.string());
  CHECK(r1.config_hash == r2.config_hash);
  REQUIRE(r1.samples.size() == r2.samples.size());
}

TEST_CASE("manifest io round trip and validation") {
  GeneratorConfig cfg;
  cfg.subjects = 6;
  cfg.bonafide_videos = 1;
  cfg.attack_videos = 2;
  cfg.frames_per_video = 2;
  cfg.image_size = 32;
  cfg.seed = 11;
  const auto dir = fresh_dir("manifest");
  const Manifest written = generate_dataset(cfg, dir.string());
  const Manifest read = read_manifest(dir.string());
  REQUIRE(read.samples.size() == written.samples.size());
  for (size_t i = 0; i < read.samples.size(); ++i) {
    CHECK(read.samples[i].path == written.samples[i].path);
    CHECK(read.samples[i].video_id == written.samples[i].video_id);
    CHECK(read.samples[i].split == written.samples[i].split);
    CHECK(read.samples[i].label == written.samples[i].label);
    CHECK(read.samples[i].pai == written.samples[i].pai);
    CHECK(read.samples[i].frame_index == written.samples[i].frame_index);
  }

  {  // label/pai inconsistency is rejected with the offending line
    std::ofstream out((dir / "manifest.csv").string(), std::ios::app);
    out << "zz.ppm,train,bonafide,replay_moire,zz,0\n";
  }
  CHECK_THROWS_WITH_AS(read_manifest(dir.string()),
                       doctest::Contains("inconsistent with pai"), std::runtime_error);
}

TEST_CASE("select_frames implements uniform selection") {
  {
    const auto idx = select_frames(20, 20);
    REQUIRE(idx.size() == 20);
    for (int i = 0; i < 20; ++i) CHECK(idx[i] == i);
  }
  {
    const auto idx = select_frames(40, 20);
    const std::vector<int> expect{0, 2, 4, 6, 8, 10, 12, 14, 16, 18,
                                  21, 23, 25, 27, 29, 31, 33, 35, 37, 39};
    CHECK(idx == expect);
    // Oracle: evaluate the formula directly.
    for (int i = 0; i < 20; ++i)
      CHECK(idx[i] == static_cast<int>(std::llround(i * 39.0 / 19.0)));
  }
  {
    const auto idx = select_frames(5, 20);
    REQUIRE(idx.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(idx[i] == i);
  }
  // Sorted, unique, endpoints included, for random (T, n).
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    const int total = 2 + static_cast<int>(rng.uniform_int(60));
    const int n = 2 + static_cast<int>(rng.uniform_int(30));
    const auto idx = select_frames(total, n);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == std::min(total, std::max(total, 0)) - 1);
    for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
    if (total >= n) CHECK(static_cast<int>(idx.size()) == n);
  }
  CHECK_THROWS_AS(select_frames(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(select_frames(5, 0), std::invalid_argument);
}

TEST_CASE("protocols filter splits as documented") {
  GeneratorConfig cfg;  // defaults: 12 subjects, 2 bona + 4 attack videos
  cfg.frames_per_video = 2;
  cfg.image_size = 32;
  const auto dir = fresh_dir("protocols");
  const Manifest m = generate_dataset(cfg, dir.string());

  const auto grand = apply_protocol(m, builtin_protocol("grandtest"));
  CHECK(grand.train.size() + grand.dev.size() + grand.eval.size() == m.samples.size());

  const auto unseen = apply_protocol(m, builtin_protocol("unseen-replay"));
  for (const auto& s : unseen.train) CHECK(s.pai != Pai::kReplayBanding);
  for (const auto& s : unseen.dev) CHECK(s.pai != Pai::kReplayBanding);
  bool eval_has_banding = false;
  for (const auto& s : unseen.eval) eval_has_banding |= s.pai == Pai::kReplayBanding;
  CHECK(eval_has_banding);

  GeneratorConfig cfg_b = cfg;
  cfg_b.seed = 13;
  const auto dir_b = fresh_dir("protocols_b");
  const Manifest mb = generate_dataset(cfg_b, dir_b.string());
  const auto cross = apply_cross(m, mb);
  const auto b_eval = mb.split_samples(Split::kEval);
  REQUIRE(cross.eval.size() == b_eval.size());
  for (size_t i = 0; i < b_eval.size(); ++i) CHECK(cross.eval[i].path == b_eval[i].path);
  CHECK(cross.train.size() == m.split_samples(Split::kTrain).size());
  CHECK(cross.dev.size() == m.split_samples(Split::kDev).size());

  CHECK_THROWS_AS(builtin_protocol("nope"), std::invalid_argument);

  // A protocol that empties a split is rejected, as is an unseen-attack
  // protocol whose eval split lacks the held-out PAI.
  Manifest no_banding = m;
  std::erase_if(no_banding.samples,
                [](const Sample& s) { return s.pai == Pai::kReplayBanding; });
  CHECK_THROWS_WITH_AS(apply_protocol(no_banding, builtin_protocol("unseen-replay")),
                       doctest::Contains("no PAI unseen"), std::runtime_error);
  Manifest no_eval = m;
  std::erase_if(no_eval.samples,
                [](const Sample& s) { return s.split == Split::kEval; });
  CHECK_THROWS_WITH_AS(apply_protocol(no_eval, builtin_protocol("grandtest")),
                       doctest::Contains("empty split"), std::runtime_error);
}
