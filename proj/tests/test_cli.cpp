#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "test_data.hpp"

using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("ADVDGA_CLI");
  REQUIRE_MESSAGE(p != nullptr, "ADVDGA_CLI must point at the tool binary");
  return p;
}

// Runs the tool with stderr captured to a log next to the outputs.
int run_cli(const std::string& args, const std::string& log) {
  std::string cmd = cli_path() + " " + args + " 2>" + log;
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const std::string& path) {
  return json::parse(advdga::testing::slurp(path));
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("usage and error exit codes") {
  std::string dir = advdga::testing::scratch_dir("cli_errors");
  std::string log = dir + "/err.log";
  CHECK(run_cli("", log) == 1);        // a subcommand is required
  CHECK(run_cli("--help", log) == 0);  // help is a successful exit
  CHECK(run_cli("train --out " + dir, log) == 1);  // missing required --data
  // Unknown group names are usage errors, caught before any file access.
  CHECK(run_cli("logo --model x --data y --group nonsense --out " + dir, log) == 1);
  // Missing input files are data errors.
  CHECK(run_cli("train --data " + dir + "/absent.csv --out " + dir, log) == 2);
  CHECK(advdga::testing::slurp(log).find("data error") != std::string::npos);
}

TEST_CASE("dataset build subcommand writes reports") {
  std::string dir = advdga::testing::scratch_dir("cli_build");
  write_file(dir + "/benign.txt", "www.example.com\nother.com\nbad..line\n");
  write_file(dir + "/mal.csv", "fam,evil.com\nfam,alsoevil.com\n");
  write_file(dir + "/psl.txt", "com\n");
  std::string log = dir + "/err.log";
  int code = run_cli("dataset build --benign " + dir + "/benign.txt --malicious " +
                         dir + "/mal.csv --suffix-list " + dir +
                         "/psl.txt --no-balance --out " + dir + "/out",
                     log);
  REQUIRE(code == 0);
  json report = read_json(dir + "/out/report.json");
  CHECK(report["benign_count"] == 2);
  CHECK(report["malicious_count"] == 2);
  CHECK(report["malformed_count"] == 1);
  json manifest = read_json(dir + "/out/manifest.json");
  CHECK(manifest["subcommand"] == "dataset build");
  CHECK(manifest["config_hash"].is_string());
}

TEST_CASE("end-to-end pipeline over the tool surface") {
  std::string dir = advdga::testing::scratch_dir("cli_pipeline");
  std::string log = dir + "/err.log";
  std::string data = dir + "/ds/dataset.csv";

  REQUIRE(run_cli("--seed 1 dataset synth --benign 60 --malicious 60 --out " +
                      dir + "/ds",
                  log) == 0);
  std::string csv = advdga::testing::slurp(data);
  CHECK(count_lines(csv) == 121);  // header + 120 records
  CHECK(csv.rfind("label,family,first_seen,domain\n", 0) == 0);

  REQUIRE(run_cli("--seed 1 train --data " + data + " --out " + dir +
                      "/md --epochs 2 --patience 2 --batch 24",
                  log) == 0);
  json train_report = read_json(dir + "/md/train_report.json");
  double bacc = train_report["clean"]["balanced_accuracy"];
  CHECK(bacc >= 0.0);
  CHECK(bacc <= 1.0);
  CHECK(train_report["test_size"] == 24);
  std::string model = dir + "/md/model.bin";

  // Discrete attack; rerunning with the same seed is byte-identical.
  std::string attack_args = "--seed 3 attack --model " + model + " --data " +
                            data +
                            " --attack hotflip --samples 8 --flips 1 --beam 2 "
                            "--out ";
  REQUIRE(run_cli(attack_args + dir + "/at_a", log) == 0);
  REQUIRE(run_cli(attack_args + dir + "/at_b", log) == 0);
  json at_report = read_json(dir + "/at_a/report.json");
  CHECK(at_report["sample_count"] == 8);
  CHECK(at_report["fnr"].is_number());
  CHECK(count_lines(advdga::testing::slurp(dir + "/at_a/adversarial.csv")) == 9);
  for (const char* f : {"report.json", "adversarial.csv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(advdga::testing::slurp(dir + "/at_a/" + f) ==
          advdga::testing::slurp(dir + "/at_b/" + f));
  }

  // White-box combo attack.
  REQUIRE(run_cli("--seed 4 attack --model " + model + " --data " + data +
                      " --attack pgd_linf+lbf_l2 --samples 6 --iterations 2 "
                      "--out " + dir + "/combo",
                  log) == 0);
  json combo_report = read_json(dir + "/combo/report.json");
  CHECK(combo_report["attack_id"] == "pgd_linf+lbf_l2");
  CHECK(combo_report["sample_count"] == 6);
  CHECK(combo_report["mean_levenshtein"].is_number());

  // Embedding stage persisted, then discretized in a separate run.
  REQUIRE(run_cli("--seed 5 attack --model " + model + " --data " + data +
                      " --attack pgd_l2 --samples 5 --iterations 2 --out " +
                      dir + "/emb",
                  log) == 0);
  json stage_report = read_json(dir + "/emb/report.json");
  CHECK(stage_report["embedding_fnr"].is_number());
  CHECK(count_lines(advdga::testing::slurp(dir + "/emb/origins.txt")) == 5);
  REQUIRE(run_cli("--seed 5 discretize --model " + model + " --embeddings " +
                      dir + "/emb/embeddings.dgaf --origins " + dir +
                      "/emb/origins.txt --disc lco_l2 --out " + dir + "/disc",
                  log) == 0);
  json disc_report = read_json(dir + "/disc/report.json");
  CHECK(disc_report["attack_id"] == "lco_l2");
  CHECK(disc_report["sample_count"] == 5);

  // Replay of a pre-generated sample file.
  write_file(dir + "/replay.txt", "evilaaa\nevilaaa\nevilbbb\n");
  REQUIRE(run_cli("attack --model " + model + " --attack replay --samples-file " +
                      dir + "/replay.txt --out " + dir + "/rp",
                  log) == 0);
  json rp_report = read_json(dir + "/rp/report.json");
  CHECK(rp_report["sample_count"] == 3);
  CHECK(rp_report["unique_fraction"].get<double>() == doctest::Approx(2.0 / 3.0));

  // Hardening (embedding scheme keeps this quick), then a two-model eval.
  REQUIRE(run_cli("--seed 6 harden --model " + model + " --data " + data +
                      " --scheme embedding --epochs 1 --steps 1 "
                      "--attack-iterations 1 --cw-iterations 2 "
                      "--cw-binary-steps 1 --out " + dir + "/hd",
                  log) == 0);
  json layout = read_json(dir + "/hd/layout_embedding.json");
  CHECK(layout["benign"] == 256);
  REQUIRE(layout["slots"].size() == 5);
  CHECK(layout["slots"][0]["slot"] == "pgd_l2");
  CHECK(layout["slots"][0]["count"] == 51);
  CHECK(layout["slots"][4]["count"] == 52);

  REQUIRE(run_cli("--seed 7 eval --model " + model + " --model " + dir +
                      "/hd/model.bin --data " + data +
                      " --combos hotflip,maskdga --hold-out hotflip "
                      "--samples 5 --iterations 2 --out " + dir + "/ev",
                  log) == 0);
  std::string matrix = advdga::testing::slurp(dir + "/ev/matrix.csv");
  CHECK(count_lines(matrix) == 3);  // header + 2 attack rows
  CHECK(matrix.find("hotflip") != std::string::npos);
  CHECK(matrix.find(" (held-out)") != std::string::npos);
  CHECK(matrix.find("maskdga") != std::string::npos);
  // Only the held-out attack's cells carry the flag.
  std::size_t mask_row = matrix.find("maskdga");
  CHECK(matrix.find(" (held-out)", mask_row) == std::string::npos);
  json eval_report = read_json(dir + "/ev/eval_report.json");
  CHECK(eval_report["models"].size() == 2);
}
