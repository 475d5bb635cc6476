#pragma once

// Config file handling and the staged pipeline: ingest, preprocess, title
// clustering, skill clustering, mining, analysis and the final report.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "jobskill/analyze.hpp"
#include "jobskill/corpus.hpp"
#include "jobskill/embed.hpp"
#include "jobskill/error.hpp"
#include "jobskill/harvest.hpp"
#include "jobskill/mine.hpp"
#include "jobskill/semgroup.hpp"
#include "jobskill/skillnet.hpp"

namespace jobskill::pipeline {

inline constexpr const char* kVersion = "0.1.0";

enum class Source { file, harvest };

struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  Source source = Source::file;
  std::filesystem::path input_path;
  corpus::Format input_format = corpus::Format::jsonlines;
  harvest::CrawlConfig crawl;

  std::filesystem::path embeddings;
  embed::EmbeddingFormat embeddings_format = embed::EmbeddingFormat::automatic;
  std::filesystem::path stopwords;  // optional

  semgroup::APConfig ap;

  std::size_t min_occurrence = 20;
  std::optional<double> resolution;  // default: mean off-diagonal similarity
  int restarts = 10;
  std::filesystem::path names;  // optional
  double edge_cutoff = 0.1;

  double min_support = 0.02;
  int max_len = 4;
  double min_lift = 1.0;
  std::size_t top_k = 2;
  std::size_t top_antecedents = 10;
  std::vector<mine::Segment> segments{mine::Segment::all, mine::Segment::fresher, mine::Segment::experienced,
                                      mine::Segment::high_vacancy, mine::Segment::high_application};
  mine::SegmentOptions segment_options;

  std::filesystem::path gazetteer;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;
  unsigned threads = 0;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// Every key with its default value, in config-file syntax.
std::string defaults_ini();

struct ConfigLoad {
  PipelineConfig config;
  std::vector<std::string> errors;  // "section.key: message"
};

// Parses the file without failing fast: every malformed or unknown key is
// reported. Errors in the file itself (unreadable, not INI) are reported too.
ConfigLoad load_config(const std::filesystem::path& path);

// Range and path checks on a parsed config.
std::vector<std::string> check_config(const PipelineConfig& config);

// load_config + check_config.
std::vector<std::string> validate(const std::filesystem::path& path);

// Canonical JSON of the resolved settings (paths as written in the file).
nlohmann::json config_to_json(const PipelineConfig& config);

enum class Stage { ingest, preprocess, titles, skills, mine, analyze, report };

std::string_view stage_name(Stage s);

class StageFailure : public Error {
 public:
  StageFailure(Stage stage, const std::string& cause, ExitCode code);
  Stage stage() const noexcept { return stage_; }
  ExitCode exit_code() const noexcept override { return code_; }

 private:
  Stage stage_;
  ExitCode code_;
};

struct RunResult {
  std::vector<std::string> stages;           // in execution order
  std::map<std::string, bool> cache_hits;    // stage -> reused cached artifact
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;  // relative to the output dir
};

// Runs every stage needed for `target`, writing artifacts into the output
// directory. Failures are rethrown as StageFailure naming the stage; artifacts
// written before the failure are kept.
RunResult run(const PipelineConfig& config, Stage target = Stage::report);

}  // namespace jobskill::pipeline
