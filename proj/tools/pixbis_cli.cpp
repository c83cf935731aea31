// Command-line front end: generate a synthetic corpus, train, score,
// evaluate intra-protocol, cross-evaluate, and run the handcrafted baselines.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pixbis/checkpoint.hpp"
#include "pixbis/dataset.hpp"
#include "pixbis/metrics.hpp"
#include "pixbis/pipeline.hpp"
#include "pixbis/run_config.hpp"
#include "pixbis/synth.hpp"
#include "pixbis/train.hpp"

namespace fs = std::filesystem;
using namespace pixbis;

namespace {

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  fs::path out = base;
  out.replace_filename(base.stem().string() + suffix);
  return out;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

const std::vector<Sample>& split_by_name(const SplitView& view, const std::string& name) {
  if (name == "train") return view.train;
  if (name == "dev") return view.dev;
  if (name == "eval") return view.eval;
  throw std::invalid_argument("unknown split '" + name + "' (train, dev, or eval)");
}

void cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
  const Manifest m = generate_dataset(cfg.gen, out_dir);
  int per_split[3] = {0, 0, 0};
  std::map<Pai, int> per_pai;
  for (const auto& s : m.samples) {
    ++per_split[static_cast<int>(s.split)];
    if (s.label == Label::kAttack) ++per_pai[s.pai];
  }
  std::printf("wrote %zu frames to %s\n", m.samples.size(), out_dir.c_str());
  std::printf("splits: train %d, dev %d, eval %d\n", per_split[0], per_split[1], per_split[2]);
  std::printf("pai categories: %zu\n", per_pai.size());
  for (const auto& [pai, count] : per_pai)
    std::printf("  %s: %d frames\n", to_string(pai).c_str(), count);
  std::printf("manifest hash: %016llx\n",
              static_cast<unsigned long long>(
                  file_hash((fs::path(out_dir) / "manifest.csv").string())));
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& model_out) {
  const Manifest m = read_manifest(data_dir);
  const SplitView view = apply_protocol(m, builtin_protocol(cfg.protocol));
  std::printf("training on %zu frames (%s protocol, %d epochs, seed %llu)\n", view.train.size(),
              cfg.protocol.c_str(), cfg.train.epochs,
              static_cast<unsigned long long>(cfg.seed));

  Model model = build_model<float>(cfg.model, cfg.seed);
  AdamState adam;
  const fs::path out_path(model_out);
  const fs::path ckpt_dir = out_path.parent_path().empty() ? "." : out_path.parent_path();
  const auto log = train(model, adam, view.train, m.root, cfg.train, ckpt_dir.string());
  for (const auto& e : log)
    std::printf("epoch %d: combined %.6f (pixel %.6f, binary %.6f)\n", e.epoch, e.combined,
                e.pixel, e.binary);

  save_checkpoint(model_out, model, adam, cfg.train.epochs, cfg.seed,
                  detail::epoch_rng_states(cfg.seed, cfg.train.epochs));
  write_loss_log(log, (ckpt_dir / "loss_log.csv").string());
  std::printf("checkpoint: %s\nloss log: %s\n", model_out.c_str(),
              (ckpt_dir / "loss_log.csv").string().c_str());
}

void cmd_score(const RunConfig& cfg, const std::string& model_path, const std::string& data_dir,
               const std::string& split_name, const std::string& out_csv, int frames) {
  Checkpoint cp = load_checkpoint(model_path);
  const Manifest m = read_manifest(data_dir);
  const SplitView view = apply_protocol(m, builtin_protocol(cfg.protocol));
  const auto& samples = split_by_name(view, split_name);
  if (samples.empty()) throw std::runtime_error("split '" + split_name + "' is empty");

  const SplitScores scores = score_split(cp.model, m.root, samples, frames);
  write_scores(scores.videos, out_csv);
  const std::string frames_csv = with_suffix(out_csv, "_frames.csv").string();
  write_scores(scores.frames, frames_csv);
  std::printf("scored %zu videos (%zu frames) of %s/%s\n", scores.videos.size(),
              scores.frames.size(), m.name.c_str(), split_name.c_str());
  std::printf("video scores: %s\nframe scores: %s\n", out_csv.c_str(), frames_csv.c_str());
}

void write_report_files(const MetricsReport& report,
                        const std::vector<std::pair<std::string, std::string>>& extra,
                        const std::vector<ScoreRecord>& eval_records,
                        const std::string& report_out) {
  const std::string text = format_report_text(report, extra);
  write_text(text, report_out);
  const fs::path csv = fs::path(report_out).extension() == ".csv"
                           ? with_suffix(report_out, "_metrics.csv")
                           : fs::path(report_out).replace_extension(".csv");
  write_text(format_report_csv(report, extra), csv.string());
  const std::string roc = with_suffix(report_out, "_roc.csv").string();
  write_roc_csv(roc_points(eval_records), roc);
  std::fputs(text.c_str(), stdout);
  std::printf("report: %s\nreport csv: %s\nroc: %s\n", report_out.c_str(), csv.string().c_str(),
              roc.c_str());
}

void cmd_evaluate(const std::string& dev_csv, const std::string& eval_csv,
                  const std::string& report_out) {
  const auto dev = read_scores(dev_csv);
  const auto eval = read_scores(eval_csv);
  const MetricsReport report = evaluate_at_dev_threshold(dev, eval);
  write_report_files(report, {{"dev_scores", dev_csv}, {"eval_scores", eval_csv}}, eval,
                     report_out);
}

void cmd_cross(const std::string& model_path, const std::string& data_a,
               const std::string& data_b, const std::string& dev_source,
               const std::string& report_out, int frames) {
  if (dev_source != "a" && dev_source != "b")
    throw std::invalid_argument("--dev-source must be 'a' or 'b'");
  Checkpoint cp = load_checkpoint(model_path);
  const Manifest ma = read_manifest(data_a);
  const Manifest mb = read_manifest(data_b);

  const Manifest& dev_manifest = dev_source == "a" ? ma : mb;
  const auto dev_samples = dev_manifest.split_samples(Split::kDev);
  const auto eval_samples = mb.split_samples(Split::kEval);
  if (dev_samples.empty() || eval_samples.empty())
    throw std::runtime_error("cross evaluation requires nonempty dev and eval splits");

  const SplitScores dev = score_split(cp.model, dev_manifest.root, dev_samples, frames);
  const SplitScores eval = score_split(cp.model, mb.root, eval_samples, frames);
  write_scores(dev.videos, with_suffix(report_out, "_dev_scores.csv").string());
  write_scores(eval.videos, with_suffix(report_out, "_eval_scores.csv").string());

  const MetricsReport report = evaluate_at_dev_threshold(dev.videos, eval.videos);
  const std::vector<std::pair<std::string, std::string>> extra{
      {"model", "cnn"},
      {"trained_on", ma.name},
      {"tested_on", mb.name},
      {"direction", ma.name + "->" + mb.name},
      {"dev_source", dev_source == "a" ? ma.name : mb.name}};
  write_report_files(report, extra, eval.videos, report_out);
}

void cmd_baseline(const RunConfig& cfg, const std::string& kind_name,
                  const std::string& data_dir, const std::string& report_out, int frames,
                  const std::string& features_out) {
  const BaselineKind kind = baseline_kind_from_string(kind_name);
  const Manifest m = read_manifest(data_dir);
  const SplitView view = apply_protocol(m, builtin_protocol(cfg.protocol));
  const BaselineScores result = run_baseline(kind, view, m.root, frames, cfg.baseline);

  write_scores(result.dev.videos, with_suffix(report_out, "_dev_scores.csv").string());
  write_scores(result.eval.videos, with_suffix(report_out, "_eval_scores.csv").string());
  if (!features_out.empty()) write_feature_dump(kind, view.eval, m.root, features_out);

  const MetricsReport report = evaluate_at_dev_threshold(result.dev.videos, result.eval.videos);
  std::vector<std::pair<std::string, std::string>> extra{
      {"model", kind_name}, {"protocol", cfg.protocol}, {"trained_on", m.name},
      {"tested_on", m.name}};
  if (kind == BaselineKind::kIqm)
    extra.emplace_back("note", "iqm baseline uses a reduced 18-measure feature set");
  write_report_files(report, extra, result.eval.videos, report_out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixel-wise binary supervision for presentation attack detection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "key=value config file ('#' comments)");
  app.add_option("--seed", seed, "master seed for all random streams")
      ->each([&](const std::string&) { seed_given = true; });

  std::string out, data_dir, model_path, data_a, data_b, dev_csv, eval_csv;
  std::string split_name = "eval", dev_source = "a", kind, features_out;
  int frames = 20;
  int epochs_override = -1;
  std::string protocol_override;

  auto* generate = app.add_subcommand("generate", "render a synthetic corpus");
  generate->add_option("--out", out, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train the pixel-wise model");
  train_cmd->add_option("--data", data_dir, "dataset directory (manifest.csv)")->required();
  train_cmd->add_option("--out", out, "checkpoint output path")->required();
  train_cmd->add_option("--epochs", epochs_override, "override train.epochs");
  train_cmd->add_option("--protocol", protocol_override, "grandtest or unseen-replay");

  auto* score = app.add_subcommand("score", "score a split with a trained model");
  score->add_option("--model", model_path, "checkpoint path")->required();
  score->add_option("--data", data_dir, "dataset directory")->required();
  score->add_option("--split", split_name, "train, dev, or eval (default eval)");
  score->add_option("--out", out, "video score csv path")->required();
  score->add_option("--frames", frames, "frames per video (default 20)");
  score->add_option("--protocol", protocol_override, "grandtest or unseen-replay");

  auto* evaluate = app.add_subcommand("evaluate", "metrics from dev and eval score csvs");
  evaluate->add_option("--dev", dev_csv, "dev video scores csv")->required();
  evaluate->add_option("--eval", eval_csv, "eval video scores csv")->required();
  evaluate->add_option("--out", out, "report output path")->required();

  auto* cross = app.add_subcommand("cross", "score dataset B with a model trained on A");
  cross->add_option("--model", model_path, "checkpoint trained on dataset A")->required();
  cross->add_option("--data-a", data_a, "dataset A directory")->required();
  cross->add_option("--data-b", data_b, "dataset B directory")->required();
  cross->add_option("--dev-source", dev_source, "threshold dev split: a (default) or b");
  cross->add_option("--out", out, "report output path")->required();
  cross->add_option("--frames", frames, "frames per video (default 20)");

  auto* baseline = app.add_subcommand("baseline", "lbp or iqm baseline end to end");
  baseline->add_option("--kind", kind, "lbp or iqm")->required();
  baseline->add_option("--data", data_dir, "dataset directory")->required();
  baseline->add_option("--out", out, "report output path")->required();
  baseline->add_option("--frames", frames, "frames per video (default 20)");
  baseline->add_option("--protocol", protocol_override, "grandtest or unseen-replay");
  baseline->add_option("--features-out", features_out, "optional eval feature dump csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) load_run_config_file(cfg, config_path);
    if (seed_given) cfg.seed = seed;
    if (epochs_override > 0) cfg.train.epochs = epochs_override;
    if (!protocol_override.empty()) cfg.protocol = protocol_override;
    cfg.finalize();

    if (generate->parsed()) cmd_generate(cfg, out);
    else if (train_cmd->parsed()) cmd_train(cfg, data_dir, out);
    else if (score->parsed()) cmd_score(cfg, model_path, data_dir, split_name, out, frames);
    else if (evaluate->parsed()) cmd_evaluate(dev_csv, eval_csv, out);
    else if (cross->parsed()) cmd_cross(model_path, data_a, data_b, dev_source, out, frames);
    else if (baseline->parsed()) cmd_baseline(cfg, kind, data_dir, out, frames, features_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
