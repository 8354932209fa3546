#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "cxr/cli.hpp"
#include "cxr/io.hpp"
#include "test_support.hpp"

using namespace cxr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() : dir(fs::temp_directory_path() /
                  ("cxr_cli_test_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int cli(std::vector<std::string> args) { return run_cli(args); }

// A small dataset directory produced by the synth command.
std::string make_dataset(const TempDir& tmp, const std::string& name,
                         int studies, int seed) {
  const std::string dir = tmp.path(name);
  REQUIRE(cli({"synth", "--out", dir, "--studies", std::to_string(studies),
               "--seed", std::to_string(seed)}) == 0);
  return dir;
}

}  // namespace

TEST_CASE("label: two-report fixture") {
  TempDir tmp;
  write_reports_jsonl(tmp.path("reports.jsonl"),
                      {{"s1", "FINDINGS: Small effusion."},
                       {"s2", "IMPRESSION: No pneumothorax."}});
  REQUIRE(cli({"label", "--reports", tmp.path("reports.jsonl"), "--out",
               tmp.path("out")}) == 0);
  const auto labels = read_labels_jsonl(tmp.path("out") + "/labels.jsonl");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0][Disease::PleuralEffusion].probability == 1.0);
  CHECK(labels[0][Disease::PleuralEffusion].severity == Severity::Mild);
  CHECK(labels[1][Disease::Pneumothorax].probability == 0.0);
  CHECK(fs::exists(tmp.path("out") + "/manifest.json"));
}

TEST_CASE("label: report fragments with severity and uncertainty wording") {
  TempDir tmp;
  write_reports_jsonl(
      tmp.path("reports.jsonl"),
      {{"fig", "FINDINGS: Small effusion. Mild cardiomegaly. Pneumonia cannot "
               "be excluded. IMPRESSION: No pneumothorax."}});
  REQUIRE(cli({"label", "--reports", tmp.path("reports.jsonl"), "--out",
               tmp.path("out")}) == 0);
  const auto labels = read_labels_jsonl(tmp.path("out") + "/labels.jsonl");
  REQUIRE(labels.size() == 1);
  CHECK(labels[0][Disease::PleuralEffusion].probability == 1.0);
  CHECK(labels[0][Disease::PleuralEffusion].severity == Severity::Mild);
  CHECK(labels[0][Disease::Cardiomegaly].probability == 1.0);
  CHECK(labels[0][Disease::Cardiomegaly].severity == Severity::Mild);
  CHECK(labels[0][Disease::Pneumonia].probability == 0.3);
  CHECK(labels[0][Disease::Pneumothorax].probability == 0.0);
  CHECK(labels[0][Disease::Hernia].probability == 0.1);
}

TEST_CASE("label: malformed rules exit 2 and leave no outputs") {
  TempDir tmp;
  write_reports_jsonl(tmp.path("reports.jsonl"), {{"s1", "clear."}});
  write_text_file(tmp.path("rules.txt"), "[diseases]\nNotADisease: foo\n");
  CHECK(cli({"label", "--reports", tmp.path("reports.jsonl"), "--rules",
             tmp.path("rules.txt"), "--out", tmp.path("out")}) == 2);
  CHECK_FALSE(fs::exists(tmp.path("out") + "/labels.jsonl"));
}

TEST_CASE("label: unreadable input exits 1") {
  TempDir tmp;
  CHECK(cli({"label", "--reports", tmp.path("nope.jsonl"), "--out",
             tmp.path("out")}) == 1);
}

TEST_CASE("label runs are byte-identical") {
  TempDir tmp;
  write_reports_jsonl(tmp.path("reports.jsonl"),
                      {{"s1", "FINDINGS: likely edema. IMPRESSION: no hernia."}});
  REQUIRE(cli({"label", "--reports", tmp.path("reports.jsonl"), "--out",
               tmp.path("a")}) == 0);
  REQUIRE(cli({"label", "--reports", tmp.path("reports.jsonl"), "--out",
               tmp.path("b")}) == 0);
  CHECK(read_text_file(tmp.path("a") + "/labels.jsonl") ==
        read_text_file(tmp.path("b") + "/labels.jsonl"));
  CHECK(read_text_file(tmp.path("a") + "/manifest.json") ==
        read_text_file(tmp.path("b") + "/manifest.json"));
}

TEST_CASE("stats emits both tables deterministically") {
  TempDir tmp;
  const std::string data = make_dataset(tmp, "data", 40, 5);
  REQUIRE(cli({"stats", "--labels", data + "/labels.jsonl", "--out",
               tmp.path("stats")}) == 0);
  const std::string dist = read_text_file(tmp.path("stats") + "/distribution.csv");
  CHECK(dist.rfind("disease,p1.0,p0.7,p0.5,p0.3\n", 0) == 0);
  const std::string co = read_text_file(tmp.path("stats") + "/cooccurrence.csv");
  CHECK(co.rfind("disease,Atelectasis", 0) == 0);

  REQUIRE(cli({"stats", "--labels", data + "/labels.jsonl", "--out",
               tmp.path("stats2")}) == 0);
  CHECK(read_text_file(tmp.path("stats2") + "/distribution.csv") == dist);
}

TEST_CASE("split command honors the certain-only test constraint") {
  TempDir tmp;
  const std::string data = make_dataset(tmp, "data", 60, 9);
  REQUIRE(cli({"split", "--labels", data + "/labels.jsonl", "--seed", "4",
               "--out", tmp.path("split")}) == 0);
  const DatasetSplit split = read_split_json(tmp.path("split") + "/split.json");
  CHECK(split.seed == 4);
  CHECK(split.train.size() + split.val.size() + split.test.size() == 60);

  const auto labels = read_labels_jsonl(data + "/labels.jsonl");
  for (const std::string& id : split.test) {
    for (const auto& v : labels) {
      if (v.study_id == id) CHECK(is_certain_only(v));
    }
  }
}

TEST_CASE("synth is deterministic per seed") {
  TempDir tmp;
  const std::string a = make_dataset(tmp, "a", 25, 7);
  const std::string b = make_dataset(tmp, "b", 25, 7);
  const std::string c = make_dataset(tmp, "c", 25, 8);
  CHECK(read_text_file(a + "/reports.jsonl") == read_text_file(b + "/reports.jsonl"));
  CHECK(read_text_file(a + "/features.rgnf") == read_text_file(b + "/features.rgnf"));
  CHECK(read_text_file(a + "/labels.jsonl") == read_text_file(b + "/labels.jsonl"));
  CHECK(read_text_file(a + "/reports.jsonl") != read_text_file(c + "/reports.jsonl"));
}

TEST_CASE("train, eval, explain, and sweep run end to end") {
  TempDir tmp;
  const std::string data = make_dataset(tmp, "data", 60, 3);

  REQUIRE(cli({"train", "--data", data, "--out", tmp.path("run"), "--epochs",
               "2", "--batch", "16", "--hidden", "8", "--edge-dim", "4",
               "--head-hidden", "8", "--seed", "3", "--threads", "2"}) == 0);
  CHECK(fs::exists(tmp.path("run") + "/checkpoint.mrgc"));
  const std::string metrics = read_text_file(tmp.path("run") + "/metrics.csv");
  CHECK(metrics.rfind("epoch,train_loss,val_mean_auc,top5,top10\n", 0) == 0);
  // header + one row per epoch
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);

  SUBCASE("hard and expert losses emit comparable metric tables") {
    REQUIRE(cli({"train", "--data", data, "--out", tmp.path("hard"), "--loss",
                 "hard", "--epochs", "2", "--batch", "16", "--hidden", "8",
                 "--edge-dim", "4", "--head-hidden", "8", "--seed", "3"}) == 0);
    const std::string hard = read_text_file(tmp.path("hard") + "/metrics.csv");
    CHECK(hard.rfind("epoch,train_loss,val_mean_auc,top5,top10\n", 0) == 0);
    CHECK(std::count(hard.begin(), hard.end(), '\n') ==
          std::count(metrics.begin(), metrics.end(), '\n'));
    CHECK(hard != metrics);  // different loss, different numbers
  }

  SUBCASE("training twice with one seed is bit-identical") {
    REQUIRE(cli({"train", "--data", data, "--out", tmp.path("run2"), "--epochs",
                 "2", "--batch", "16", "--hidden", "8", "--edge-dim", "4",
                 "--head-hidden", "8", "--seed", "3", "--threads", "1"}) == 0);
    CHECK(read_text_file(tmp.path("run") + "/checkpoint.mrgc") ==
          read_text_file(tmp.path("run2") + "/checkpoint.mrgc"));
    CHECK(read_text_file(tmp.path("run") + "/metrics.csv") ==
          read_text_file(tmp.path("run2") + "/metrics.csv"));
  }

  SUBCASE("eval writes summary and per-class tables") {
    REQUIRE(cli({"eval", "--data", data, "--checkpoint",
                 tmp.path("run") + "/checkpoint.mrgc", "--split", "val",
                 "--out", tmp.path("eval")}) == 0);
    const std::string summary =
        read_text_file(tmp.path("eval") + "/eval_summary.csv");
    CHECK(summary.rfind("split,n_studies,mean_auc,top5,top10\n", 0) == 0);
    CHECK(summary.find("val,") != std::string::npos);
    CHECK(fs::exists(tmp.path("eval") + "/eval_per_class.csv"));

    REQUIRE(cli({"eval", "--data", data, "--checkpoint",
                 tmp.path("run") + "/checkpoint.mrgc", "--split", "test",
                 "--unmentioned", "exclude", "--out", tmp.path("eval2")}) == 0);
  }

  SUBCASE("explain emits JSON and SVG for a study") {
    const DatasetSplit split = read_split_json(data + "/split.json");
    const std::string study = split.test.at(0);
    REQUIRE(cli({"explain", "--data", data, "--checkpoint",
                 tmp.path("run") + "/checkpoint.mrgc", "--study", study,
                 "--class", "Cardiomegaly", "--out", tmp.path("explain")}) == 0);
    const std::string json =
        read_text_file(tmp.path("explain") + "/explanation.json");
    CHECK(json.find("\"class\": \"Cardiomegaly\"") != std::string::npos);
    CHECK(json.find(study) != std::string::npos);
    const std::string svg = read_text_file(tmp.path("explain") + "/overlay.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("stroke=\"red\"") != std::string::npos);

    CHECK(cli({"explain", "--data", data, "--checkpoint",
               tmp.path("run") + "/checkpoint.mrgc", "--study", study,
               "--class", "NotADisease", "--out", tmp.path("explain2")}) == 3);
  }

  SUBCASE("tau sweep emits one row per grid point") {
    REQUIRE(cli({"sweep", "--data", data, "--mode", "tau", "--out",
                 tmp.path("sweep"), "--epochs", "1", "--batch", "16",
                 "--hidden", "6", "--edge-dim", "3", "--head-hidden", "0",
                 "--seed", "3"}) == 0);
    const std::string csv = read_text_file(tmp.path("sweep") + "/sweep.csv");
    CHECK(csv.rfind("tau,mean_auc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 taus
  }

  SUBCASE("alpha/beta sweep skips invalid cells") {
    REQUIRE(cli({"sweep", "--data", data, "--mode", "alphabeta",
                 "--alpha-grid", "0,1", "--beta-grid", "0,0.5", "--out",
                 tmp.path("sweepab"), "--epochs", "1", "--batch", "16",
                 "--hidden", "6", "--edge-dim", "3", "--head-hidden", "0",
                 "--seed", "3"}) == 0);
    const std::string csv = read_text_file(tmp.path("sweepab") + "/sweep.csv");
    CHECK(csv.rfind("alpha,beta,mean_auc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 cells
  }

  SUBCASE("phase-2 semantic training runs") {
    REQUIRE(cli({"train", "--data", data, "--out", tmp.path("p2"), "--epochs",
                 "1", "--batch", "16", "--hidden", "6", "--edge-dim", "3",
                 "--head-hidden", "0", "--seed", "3", "--semantic", "phase2"}) ==
            0);
    const std::string metrics2 = read_text_file(tmp.path("p2") + "/metrics.csv");
    // two stages, one epoch each
    CHECK(std::count(metrics2.begin(), metrics2.end(), '\n') == 3);
  }
}

TEST_CASE("usage errors and unknown subcommands fail without crashing") {
  CHECK(cli({}) != 0);
  CHECK(cli({"bogus"}) != 0);
  CHECK(cli({"train", "--data"}) != 0);
}

TEST_CASE("the installed binary behaves like the in-process entry point") {
  TempDir tmp;
  write_reports_jsonl(tmp.path("reports.jsonl"), {{"s1", "FINDINGS: edema."}});
  const std::string cmd = std::string(CXRGRAPH_BIN) + " label --reports " +
                          tmp.path("reports.jsonl") + " --out " +
                          tmp.path("out") + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(tmp.path("out") + "/labels.jsonl"));

  const std::string bad = std::string(CXRGRAPH_BIN) +
                          " label --reports /does/not/exist --out " +
                          tmp.path("out2") + " > /dev/null 2>&1";
  const int bad_status = std::system(bad.c_str());
  REQUIRE(bad_status != -1);
  CHECK(WEXITSTATUS(bad_status) == 1);
}
