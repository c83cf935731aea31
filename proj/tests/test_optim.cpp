#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pixbis/adam.hpp"
#include "pixbis/checkpoint.hpp"
#include "pixbis/synth.hpp"
#include "pixbis/train.hpp"

using namespace pixbis;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pixbis_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.input_h = cfg.input_w = 32;
  cfg.stem_channels = 4;
  cfg.growth_rate = 2;
  cfg.block1_layers = 1;
  cfg.block2_layers = 1;
  cfg.bottleneck_factor = 2;
  return cfg;
}

GeneratorConfig small_corpus() {
  GeneratorConfig cfg;
  cfg.subjects = 6;
  cfg.bonafide_videos = 1;
  cfg.attack_videos = 2;
  cfg.frames_per_video = 2;
  cfg.image_size = 32;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("adam first step moves a scalar by about lr against the gradient") {
  auto p = make_tensor<float>({1}, std::vector<float>{2.0f}, true);
  p->grad = {0.37f};
  AdamState st;
  st.config.lr = 1e-3;
  st.config.weight_decay = 0.0;
  st.init({p});
  adam_step<float>({p}, st);
  CHECK(p->values[0] == doctest::Approx(2.0f - 1e-3f).epsilon(1e-4));
  CHECK(st.step_count == 1);

  // Opposite sign gradient moves the other way.
  auto q = make_tensor<float>({1}, std::vector<float>{2.0f}, true);
  q->grad = {-5.0f};
  AdamState st2 = st;
  st2.init({q});
  adam_step<float>({q}, st2);
  CHECK(q->values[0] == doctest::Approx(2.0f + 1e-3f).epsilon(1e-4));
}

TEST_CASE("adam with zero gradient and zero decay is the identity") {
  auto p = make_tensor<float>({3}, std::vector<float>{1.0f, -2.0f, 0.5f}, true);
  p->zero_grad();
  AdamState st;
  st.config.weight_decay = 0.0;
  st.init({p});
  for (int i = 0; i < 5; ++i) adam_step<float>({p}, st);
  CHECK(p->values == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("weight decay alone shrinks a parameter") {
  auto p = make_tensor<float>({1}, std::vector<float>{1.0f}, true);
  p->zero_grad();
  AdamState st;
  st.config.weight_decay = 1e-5;
  st.init({p});
  adam_step<float>({p}, st);
  CHECK(p->values[0] < 1.0f);
}

TEST_CASE("adam rejects a missing gradient") {
  auto p = make_tensor<float>({2}, true);
  AdamState st;
  st.init({p});
  CHECK_THROWS_AS(adam_step<float>({p}, st), std::invalid_argument);
}

TEST_CASE("balance_classes undersamples the majority class") {
  std::vector<Sample> samples;
  for (int i = 0; i < 100; ++i)
    samples.push_back({"a.ppm", Label::kAttack, Pai::kReplayMoire, "a" + std::to_string(i), 0,
                       Split::kTrain});
  for (int i = 0; i < 40; ++i)
    samples.push_back({"b.ppm", Label::kBonafide, Pai::kNone, "b" + std::to_string(i), 0,
                       Split::kTrain});
  const auto idx = balance_classes(samples, 3);
  CHECK(idx.size() == 80);
  int bona = 0, attack = 0;
  for (int i : idx) (samples[i].label == Label::kBonafide ? bona : attack)++;
  CHECK(bona == 40);
  CHECK(attack == 40);

  CHECK(balance_classes(samples, 3) == idx);  // same seed, same draw
  CHECK(balance_classes(samples, 4) != idx);

  std::vector<Sample> balanced(samples.begin() + 60, samples.end());  // 40 + 40
  auto perm = balance_classes(balanced, 9);
  std::sort(perm.begin(), perm.end());
  for (size_t i = 0; i < perm.size(); ++i) CHECK(perm[i] == static_cast<int>(i));

  std::vector<Sample> one_class(samples.begin(), samples.begin() + 10);
  CHECK_THROWS_AS(balance_classes(one_class, 1), std::runtime_error);
}

TEST_CASE("augment identities and range") {
  const Image img = render_bonafide(3, 32, 0, 0, 0);
  {
    Rng rng(1);
    const Image out = augment(img, rng, 0.0, 0.0);
    CHECK(out.data == img.data);
  }
  {
    Rng r1(2), r2(3);
    const Image once = augment(img, r1, 1.0, 0.0);
    const Image twice = augment(once, r2, 1.0, 0.0);
    CHECK(twice.data == img.data);  // flipping twice is the identity
  }
  {
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
      const Image out = augment(img, rng, 0.5, 0.3);
      for (float v : out.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
    }
  }
}

TEST_CASE("checkpoint round trip is bitwise lossless") {
  auto model = build_model<float>(small_config(), 77);
  AdamState adam;
  adam.init(model.trainable_parameters());
  adam.m[0][0] = 0.25f;
  adam.v[0][0] = 0.5f;
  adam.step_count = 3;
  const auto dir = fresh_dir("ckpt");
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, model, adam, 3, 1234,
                  {{"balance", Rng(1).save_state()}, {"shuffle", Rng(2).save_state()}});

  const Checkpoint cp = load_checkpoint(path);
  CHECK(cp.epoch == 3);
  CHECK(cp.master_seed == 1234);
  CHECK(cp.adam.step_count == 3);
  CHECK(cp.adam.m[0][0] == 0.25f);
  CHECK(cp.rng_states.size() == 2);
  CHECK(cp.rng_states[0].first == "balance");
  CHECK(cp.rng_states[0].second == Rng(1).save_state());

  const auto na = model.named_parameters();
  const auto nb = cp.model.named_parameters();
  REQUIRE(na.size() == nb.size());
  for (size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].first == nb[i].first);
    CHECK(na[i].second->values == nb[i].second->values);
  }

  // Saving the loaded model reproduces the file exactly.
  const std::string path2 = (dir / "m2.ckpt").string();
  save_checkpoint(path2, cp.model, cp.adam, cp.epoch, cp.master_seed, cp.rng_states);
  CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("truncated checkpoint is rejected with offset information") {
  auto model = build_model<float>(small_config(), 78);
  AdamState adam;
  adam.init(model.trainable_parameters());
  const auto dir = fresh_dir("ckpt_trunc");
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, model, adam, 1, 9, {});
  auto bytes = file_bytes(path);
  bytes.resize(bytes.size() / 2);
  const std::string cut = (dir / "cut.ckpt").string();
  std::ofstream(cut, std::ios::binary).write(bytes.data(), bytes.size());
  CHECK_THROWS_WITH_AS(load_checkpoint(cut), doctest::Contains("offset"), std::runtime_error);

  std::ofstream(cut, std::ios::binary) << "NOTACKPT";
  CHECK_THROWS_AS(load_checkpoint(cut), std::runtime_error);
}

TEST_CASE("two-epoch training writes a log and is seed-deterministic") {
  const auto data_dir = fresh_dir("train_data");
  const Manifest m = generate_dataset(small_corpus(), data_dir.string());
  const auto train_samples = m.split_samples(Split::kTrain);
  REQUIRE(train_samples.size() >= 8);

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.seed = 21;

  const auto run = [&](const std::string& tag) {
    auto model = build_model<float>(small_config(), tc.seed);
    AdamState adam;
    const auto ckpt_dir = fresh_dir("train_" + tag);
    const auto log = train(model, adam, train_samples, data_dir.string(), tc, ckpt_dir.string());
    return std::make_pair(log, file_bytes((ckpt_dir / "epoch_002.ckpt").string()));
  };

  const auto [log1, ckpt1] = run("a");
  CHECK(log1.size() == 2);
  CHECK(log1[0].epoch == 1);
  CHECK(log1[1].epoch == 2);
  for (const auto& e : log1) {
    CHECK(std::isfinite(e.combined));
    CHECK(e.combined == doctest::Approx(0.5 * e.pixel + 0.5 * e.binary).epsilon(1e-6));
  }

  const auto [log2, ckpt2] = run("b");
  CHECK(ckpt1 == ckpt2);
  CHECK(log1[1].combined == log2[1].combined);
}

TEST_CASE("resume from an epoch checkpoint matches uninterrupted training") {
  const auto data_dir = fresh_dir("resume_data");
  const Manifest m = generate_dataset(small_corpus(), data_dir.string());
  const auto train_samples = m.split_samples(Split::kTrain);

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.seed = 31;

  const auto straight_dir = fresh_dir("resume_straight");
  {
    auto model = build_model<float>(small_config(), tc.seed);
    AdamState adam;
    train(model, adam, train_samples, data_dir.string(), tc, straight_dir.string());
  }

  const auto resumed_dir = fresh_dir("resume_steps");
  {
    auto model = build_model<float>(small_config(), tc.seed);
    AdamState adam;
    TrainConfig one = tc;
    one.epochs = 1;
    train(model, adam, train_samples, data_dir.string(), one, resumed_dir.string());
  }
  {
    Checkpoint cp = load_checkpoint((resumed_dir / "epoch_001.ckpt").string());
    train(cp.model, cp.adam, train_samples, data_dir.string(), tc, resumed_dir.string(),
          cp.epoch);
  }

  CHECK(file_bytes((straight_dir / "epoch_002.ckpt").string()) ==
        file_bytes((resumed_dir / "epoch_002.ckpt").string()));
}

TEST_CASE("loss log csv has the documented schema") {
  const auto dir = fresh_dir("losslog");
  write_loss_log({{1, 0.5, 0.6, 0.4}, {2, 0.25, 0.3, 0.2}}, (dir / "log.csv").string());
  std::ifstream in((dir / "log.csv").string());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,combined,pixel,binary");
  std::getline(in, line);
  CHECK(line == "1,0.5,0.6,0.4");
}
