// Integration checks of the command-line surface on a miniature corpus:
// flag handling, row counts, determinism, and exit codes.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

int run(const std::string& args) {
  const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + (g_work / "last.log").string() +
                          "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

int line_count(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli end to end on a miniature corpus") {
  const fs::path cfg_path = g_work / "mini.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "# miniature run\n"
           "gen.size=32\ngen.subjects=6\ngen.bonafide_videos=1\ngen.attack_videos=2\n"
           "gen.frames=6\n"
           "model.input=32\nmodel.stem=4\nmodel.growth=2\nmodel.block1=1\nmodel.block2=1\n"
           "model.bottleneck=2\n"
           "train.epochs=3\ntrain.batch=8\n";
  }
  const std::string base = " --config \"" + cfg_path.string() + "\" --seed 11";
  const fs::path corpus = g_work / "corpus";
  const fs::path run_dir = g_work / "run";
  fs::create_directories(run_dir);

  REQUIRE(run("generate --out \"" + corpus.string() + "\"" + base) == 0);
  CHECK(fs::exists(corpus / "manifest.csv"));

  // --epochs overrides the config file value (3) down to one epoch.
  REQUIRE(run("train --data \"" + corpus.string() + "\" --out \"" +
              (run_dir / "model.ckpt").string() + "\" --epochs 1" + base) == 0);
  CHECK(fs::exists(run_dir / "model.ckpt"));
  CHECK(fs::exists(run_dir / "loss_log.csv"));
  CHECK(line_count(run_dir / "loss_log.csv") == 2);  // header + 1 epoch

  // A different seed lands on a different checkpoint.
  REQUIRE(run("train --data \"" + corpus.string() + "\" --out \"" +
              (run_dir / "model_seed12.ckpt").string() + "\" --epochs 1 --config \"" +
              cfg_path.string() + "\" --seed 12") == 0);
  CHECK(slurp(run_dir / "model.ckpt") != slurp(run_dir / "model_seed12.ckpt"));

  // Default frame budget exceeds the 6 stored frames: all of them are used.
  const fs::path dev_csv = run_dir / "dev.csv";
  REQUIRE(run("score --model \"" + (run_dir / "model.ckpt").string() + "\" --data \"" +
              corpus.string() + "\" --split dev --out \"" + dev_csv.string() + "\"" + base) == 0);
  const int dev_videos = line_count(dev_csv) - 1;
  CHECK(dev_videos > 0);
  CHECK(line_count(run_dir / "dev_frames.csv") - 1 == dev_videos * 6);

  // --frames 3 keeps 3 frames per video.
  REQUIRE(run("score --model \"" + (run_dir / "model.ckpt").string() + "\" --data \"" +
              corpus.string() + "\" --split eval --out \"" + (run_dir / "eval.csv").string() +
              "\" --frames 3" + base) == 0);
  const int eval_videos = line_count(run_dir / "eval.csv") - 1;
  CHECK(line_count(run_dir / "eval_frames.csv") - 1 == eval_videos * 3);

  // Scoring is deterministic: a second run writes identical bytes.
  REQUIRE(run("score --model \"" + (run_dir / "model.ckpt").string() + "\" --data \"" +
              corpus.string() + "\" --split dev --out \"" + (run_dir / "dev2.csv").string() +
              "\"" + base) == 0);
  CHECK(slurp(dev_csv) == slurp(run_dir / "dev2.csv"));

  REQUIRE(run("evaluate --dev \"" + dev_csv.string() + "\" --eval \"" +
              (run_dir / "eval.csv").string() + "\" --out \"" +
              (run_dir / "report.txt").string() + "\"") == 0);
  CHECK(fs::exists(run_dir / "report.txt"));
  CHECK(fs::exists(run_dir / "report.csv"));
  const int roc_rows = line_count(run_dir / "report_roc.csv") - 1;
  // Sweep contract: one row per distinct eval score plus one.
  std::ifstream eval_in(run_dir / "eval.csv");
  std::string line;
  std::getline(eval_in, line);
  std::vector<std::string> scores;
  while (std::getline(eval_in, line)) scores.push_back(line.substr(line.rfind(',') + 1));
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  CHECK(roc_rows == static_cast<int>(scores.size()) + 1);

  // Baseline report shares the schema with the cnn report (same metric rows).
  REQUIRE(run("baseline --kind lbp --data \"" + corpus.string() + "\" --out \"" +
              (run_dir / "lbp.txt").string() + "\"" + base) == 0);
  auto metric_names = [](const fs::path& p) {
    std::ifstream in(p);
    std::string l;
    std::vector<std::string> names;
    while (std::getline(in, l)) {
      const auto comma = l.find(',');
      const std::string key = l.substr(0, comma);
      if (key == "metric" || key == "model" || key == "protocol" || key == "trained_on" ||
          key == "tested_on" || key == "dev_scores" || key == "eval_scores" ||
          key == "direction" || key == "dev_source" || key == "note")
        continue;
      names.push_back(key);
    }
    return names;
  };
  CHECK(metric_names(run_dir / "lbp.csv") == metric_names(run_dir / "report.csv"));

  // iqm report carries its reduced-set note.
  REQUIRE(run("baseline --kind iqm --data \"" + corpus.string() + "\" --out \"" +
              (run_dir / "iqm.txt").string() + "\"" + base) == 0);
  CHECK(slurp(run_dir / "iqm.txt").find("reduced 18-measure") != std::string::npos);

  // cross on the corpus itself reproduces the intra numbers.
  REQUIRE(run("cross --model \"" + (run_dir / "model.ckpt").string() + "\" --data-a \"" +
              corpus.string() + "\" --data-b \"" + corpus.string() + "\" --out \"" +
              (run_dir / "self_cross.txt").string() + "\"" + base) == 0);
  const std::string self_cross = slurp(run_dir / "self_cross.csv");
  const std::string intra = slurp(run_dir / "report.csv");
  auto value_of = [](const std::string& csv, const std::string& key) {
    const auto pos = csv.find("\n" + key + ",");
    REQUIRE(pos != std::string::npos);
    const auto start = pos + key.size() + 2;
    return csv.substr(start, csv.find('\n', start) - start);
  };
  CHECK(value_of(self_cross, "threshold") == value_of(intra, "threshold"));
  CHECK(value_of(self_cross, "hter") == value_of(intra, "hter"));
  CHECK(slurp(run_dir / "self_cross.txt").find("direction: corpus->corpus") !=
        std::string::npos);
}

TEST_CASE("cli exit codes distinguish usage from data errors") {
  CHECK(run("score") == 1);                       // missing required flags
  CHECK(run("nonsense") == 1);                    // unknown subcommand
  CHECK(run("generate --out \"" + (g_work / "x").string() + "\" --config \"" +
            (g_work / "missing.cfg").string() + "\"") == 2);
  {
    std::ofstream bad(g_work / "bad.cfg");
    bad << "no.such.key=1\n";
  }
  CHECK(run("generate --out \"" + (g_work / "x").string() + "\" --config \"" +
            (g_work / "bad.cfg").string() + "\"") == 1);
  CHECK(run("train --data \"" + (g_work / "nodir").string() + "\" --out \"" +
            (g_work / "x.ckpt").string() + "\"") == 2);
  CHECK(run("evaluate --dev \"" + (g_work / "nope.csv").string() + "\" --eval \"" +
            (g_work / "nope.csv").string() + "\" --out \"" + (g_work / "r.txt").string() +
            "\"") == 2);
}

int main(int argc, char** argv) {
  doctest::Context context;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") g_cli = argv[i + 1];
    if (flag == "--workdir") g_work = argv[i + 1];
  }
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: test_cli --cli PATH [--workdir DIR]\n");
    return 64;
  }
  if (g_work.empty()) g_work = fs::current_path() / "cli_test_work";
  fs::remove_all(g_work);
  fs::create_directories(g_work);
  return context.run();
}
