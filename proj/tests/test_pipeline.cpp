#include <cstdlib>
#include <filesystem>
#include <map>
#include <sys/wait.h>

#include "doctest.h"
#include "jobskill/error.hpp"
#include "jobskill/pipeline.hpp"
#include "jobskill/text.hpp"
#include "support/fixtures.hpp"

using namespace jobskill;
using namespace jobskill::pipeline;
namespace fs = std::filesystem;

namespace {

std::string bundled_config(const fs::path& out, const std::string& extra = {}) {
  auto data = fixture::data_dir().string();
  return "[input]\npath = " + data + "/synth_corpus.jsonl\n" +  //
         "[embed]\nembeddings = " + data + "/embeddings.txt\nstopwords = " + data + "/stopwords.txt\n" +
         "[analyze]\ngazetteer = " + data + "/gazetteer.csv\n" +  //
         "[output]\ndir = " + out.string() + "\n" + extra;
}

PipelineConfig load_ok(const fs::path& path) {
  auto loaded = load_config(path);
  for (const auto& e : loaded.errors) FAIL_CHECK(e);
  return loaded.config;
}

// Relative path -> contents for every regular file below root.
std::map<std::string, std::string> tree(const fs::path& root, bool skip_cache = false) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), root).string();
    if (skip_cache && rel.rfind("cache/", 0) == 0) continue;
    out[rel] = read_file(entry.path());
  }
  return out;
}

int exit_status(const std::string& command) {
  int status = std::system((command + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool mentions(const std::vector<std::string>& errors, std::string_view needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("valid config has no diagnostics") {
  fixture::TempDir dir;
  write_file(dir / "ok.ini", bundled_config(dir / "out"));
  CHECK(validate(dir / "ok.ini").empty());
}

TEST_CASE("damping out of range is named") {
  fixture::TempDir dir;
  write_file(dir / "bad.ini", bundled_config(dir / "out", "[semgroup]\ndamping = 1.2\n"));
  auto errors = validate(dir / "bad.ini");
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("semgroup.damping") != std::string::npos);
}

TEST_CASE("every error is reported") {
  fixture::TempDir dir;
  write_file(dir / "bad.ini",
             bundled_config(dir / "out", "[semgroup]\ndamping = 1.2\n[mine]\nmin_support = 2\nbogus = 1\n"));
  auto errors = validate(dir / "bad.ini");
  CHECK(errors.size() == 3);
  CHECK(mentions(errors, "semgroup.damping"));
  CHECK(mentions(errors, "mine.min_support"));
  CHECK(mentions(errors, "mine.bogus"));
}

TEST_CASE("missing embeddings fail validation before any work") {
  fixture::TempDir dir;
  auto text = bundled_config(dir / "out");
  auto at = text.find("embeddings.txt");
  text.replace(at, 14, "nowhere.txt");
  write_file(dir / "bad.ini", text);
  auto errors = validate(dir / "bad.ini");
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("embed.embeddings") != std::string::npos);
  auto loaded = load_config(dir / "bad.ini");
  CHECK_THROWS_AS(run(loaded.config), ConfigError);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("malformed config lines") {
  fixture::TempDir dir;
  write_file(dir / "bad.ini", "[mine\nmin_support = 0.1\n");
  CHECK_FALSE(validate(dir / "bad.ini").empty());
  CHECK_FALSE(validate(dir / "missing.ini").empty());
}

TEST_CASE("printed defaults load back to the built-in defaults") {
  fixture::TempDir dir;
  write_file(dir / "defaults.ini", defaults_ini());
  auto loaded = load_config(dir / "defaults.ini");
  CHECK(loaded.errors.empty());
  PipelineConfig builtin;
  builtin.base_dir = loaded.config.base_dir;
  CHECK(config_to_json(loaded.config) == config_to_json(builtin));
  // only the required paths are missing
  auto errors = check_config(loaded.config);
  CHECK(mentions(errors, "input.path"));
  CHECK(mentions(errors, "embed.embeddings"));
  CHECK(mentions(errors, "analyze.gazetteer"));
}

TEST_CASE("relative paths resolve against the config file") {
  fixture::TempDir dir;
  fs::create_directories(dir / "conf");
  fs::copy_file(fixture::data_dir() / "embeddings.txt", dir / "conf/emb.txt");
  write_file(dir / "conf/c.ini", "[embed]\nembeddings = emb.txt\n");
  auto config = load_ok(dir / "conf/c.ini");
  CHECK(fs::exists(config.resolve(config.embeddings)));
}

TEST_CASE("bundled run writes a complete report") {
  fixture::TempDir dir;
  write_file(dir / "c.ini", bundled_config(dir / "out"));
  auto result = run(load_ok(dir / "c.ini"));
  CHECK(result.stages == std::vector<std::string>{"ingest", "preprocess", "cluster-titles", "cluster-skills", "mine",
                                                  "analyze", "report"});
  for (const char* p : {"corpus.jsonl", "titles/distances.csv", "titles/clusters.json", "skills/similarity.csv",
                        "skills/clusters.json", "mine/all/itemsets.csv", "mine/all/rules.csv",
                        "mine/all/recommendations.txt", "analysis/frequency_skill.csv", "analysis/geo_all.geojson",
                        "report.json", "report.txt"}) {
    CHECK_MESSAGE(fs::exists(dir / "out" / p), p);
  }
  auto report = nlohmann::json::parse(read_file(dir / "out/report.json"));
  CHECK(report["version"] == kVersion);
  CHECK(report["corpus"]["ads"] == 500);
}

TEST_CASE("identical runs give byte-identical trees") {
  fixture::TempDir dir;
  write_file(dir / "a.ini", bundled_config(dir / "a"));
  write_file(dir / "b.ini", bundled_config(dir / "b"));
  run(load_ok(dir / "a.ini"));
  run(load_ok(dir / "b.ini"));
  auto a = tree(dir / "a");
  auto b = tree(dir / "b");
  CHECK(a.size() > 20);
  CHECK(a == b);
}

TEST_CASE("changing a mining threshold reuses clustering artifacts") {
  fixture::TempDir dir;
  write_file(dir / "warm.ini", bundled_config(dir / "warm"));
  auto first = run(load_ok(dir / "warm.ini"));
  CHECK_FALSE(first.cache_hits.at("cluster-titles"));
  CHECK_FALSE(first.cache_hits.at("cluster-skills"));

  const std::string changed = "[mine]\nmin_support = 0.05\n";
  write_file(dir / "warm.ini", bundled_config(dir / "warm", changed));
  auto second = run(load_ok(dir / "warm.ini"));
  CHECK(second.cache_hits.at("cluster-titles"));
  CHECK(second.cache_hits.at("cluster-skills"));

  write_file(dir / "cold.ini", bundled_config(dir / "cold", changed));
  auto cold = run(load_ok(dir / "cold.ini"));
  CHECK_FALSE(cold.cache_hits.at("cluster-titles"));
  CHECK(tree(dir / "warm", true) == tree(dir / "cold", true));
}

TEST_CASE("a broken corpus fails the ingest stage") {
  fixture::TempDir dir;
  write_file(dir / "corpus.jsonl", "not json\nstill not json\n");
  auto text = bundled_config(dir / "out");
  text.replace(text.find(fixture::data_dir().string() + "/synth_corpus.jsonl"),
               fixture::data_dir().string().size() + 19, (dir / "corpus.jsonl").string());
  write_file(dir / "c.ini", text);
  try {
    run(load_ok(dir / "c.ini"));
    FAIL("expected a stage failure");
  } catch (const StageFailure& e) {
    CHECK(e.stage() == Stage::ingest);
    CHECK(e.exit_code() == ExitCode::data);
    CHECK(std::string(e.what()).find("ingest") != std::string::npos);
  }
}

TEST_CASE("running up to a stage stops there") {
  fixture::TempDir dir;
  write_file(dir / "c.ini", bundled_config(dir / "out"));
  auto result = run(load_ok(dir / "c.ini"), Stage::preprocess);
  CHECK(result.stages == std::vector<std::string>{"ingest", "preprocess"});
  CHECK(fs::exists(dir / "out/preprocess/skill_vocabulary.csv"));
  CHECK_FALSE(fs::exists(dir / "out/report.json"));
}

TEST_CASE("command line exit codes") {
  fixture::TempDir dir;
  const std::string cli = JOBSKILL_CLI;
  write_file(dir / "ok.ini", bundled_config(dir / "out"));
  write_file(dir / "bad.ini", bundled_config(dir / "out", "[semgroup]\ndamping = 1.2\n"));
  CHECK(exit_status(cli + " --print-defaults") == 0);
  CHECK(exit_status(cli + " validate -c " + (dir / "ok.ini").string()) == 0);
  CHECK(exit_status(cli + " validate -c " + (dir / "bad.ini").string()) == 2);
  CHECK(exit_status(cli + " run -c " + (dir / "bad.ini").string()) == 2);
  CHECK(exit_status(cli + " run -c " + (dir / "ok.ini").string() + " --seed 7") == 0);
  CHECK(fs::exists(dir / "out/report.json"));
  CHECK(exit_status(cli + " synth --spec " + (dir / "missing.json").string() + " -o " + (dir / "x").string()) == 3);
}

TEST_CASE("command line harvest against a fixture site") {
  fixture::TempDir dir;
  const std::string cli = JOBSKILL_CLI;
  auto site = (dir / "site").string();
  CHECK(exit_status(cli + " synth --spec " + (fixture::data_dir() / "synth_spec.json").string() + " --seed 3 -o " +
                    (dir / "c.jsonl").string()) == 0);
  CHECK(exit_status(cli + " fixture-site --corpus " + (dir / "c.jsonl").string() + " --per-page 50 -o " + site) == 0);
  CHECK(exit_status(cli + " harvest --root " + site + " --key-phrase 'data scientist' --workers 4 --rate 200 -o " +
                    (dir / "h").string()) == 0);
  CHECK(read_file(dir / "h/corpus.jsonl") == read_file(dir / "c.jsonl"));
}
