#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "jobskill/corpus.hpp"
#include "jobskill/harvest.hpp"
#include "jobskill/pipeline.hpp"
#include "jobskill/text.hpp"

namespace fs = std::filesystem;
using namespace jobskill;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config, "pipeline config file")->required();
  cmd->add_option("-o,--out", common.out, "output directory (overrides output.dir)");
  cmd->add_option("--seed", common.seed, "global seed (overrides global.seed)");
}

pipeline::PipelineConfig load(const Common& common) {
  auto loaded = pipeline::load_config(common.config);
  if (!loaded.errors.empty()) {
    std::string message = "invalid config " + common.config;
    for (const auto& e : loaded.errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  auto config = std::move(loaded.config);
  if (!common.out.empty()) config.output_dir = fs::absolute(common.out);
  if (common.seed) config.seed = *common.seed;
  return config;
}

int run_stage(const Common& common, pipeline::Stage stage) {
  auto config = load(common);
  auto result = pipeline::run(config, stage);
  for (const auto& s : result.stages) std::cerr << "done: " << s << '\n';
  std::cout << config.resolve(config.output_dir).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Job-advertisement skill analytics pipeline"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "print the default config and exit");
  app.set_version_flag("--version", pipeline::kVersion);

  Common common;
  struct StageCommand {
    const char* name;
    const char* help;
    pipeline::Stage stage;
  };
  const StageCommand stage_commands[] = {
      {"ingest", "parse the input corpus (or crawl it) into canonical JSON lines", pipeline::Stage::ingest},
      {"preprocess", "normalize titles and filter the skill vocabulary", pipeline::Stage::preprocess},
      {"cluster-titles", "group job titles by word mover's distance and affinity propagation",
       pipeline::Stage::titles},
      {"cluster-skills", "build the skill similarity matrix and cluster it", pipeline::Stage::skills},
      {"mine", "mine frequent skill sets and association rules per segment", pipeline::Stage::mine},
      {"analyze", "frequency tables, cluster distributions and geo buckets", pipeline::Stage::analyze},
      {"run", "run every stage and write the report", pipeline::Stage::report},
  };
  std::vector<std::pair<CLI::App*, pipeline::Stage>> stage_apps;
  for (const auto& sc : stage_commands) {
    auto* cmd = app.add_subcommand(sc.name, sc.help);
    add_common(cmd, common);
    stage_apps.emplace_back(cmd, sc.stage);
  }

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "check a config file without running anything");
  validate->add_option("-c,--config", validate_config, "pipeline config file")->required();

  std::string harvest_config, harvest_out = "harvest-out";
  harvest::CrawlConfig crawl;
  std::optional<std::string> root, key_phrase;
  std::optional<int> workers, max_pages;
  std::optional<double> rate;
  auto* harvest_cmd = app.add_subcommand("harvest", "crawl a fixture site into a JSON-lines corpus");
  harvest_cmd->add_option("-c,--config", harvest_config, "pipeline config file ([harvest] section)");
  harvest_cmd->add_option("--root", root, "site root: directory, file:// or http:// URL");
  harvest_cmd->add_option("--key-phrase", key_phrase, "search key phrase");
  harvest_cmd->add_option("--workers", workers, "number of downloader threads");
  harvest_cmd->add_option("--rate", rate, "max requests per second per worker");
  harvest_cmd->add_option("--max-pages", max_pages, "max listing pages to walk");
  harvest_cmd->add_option("-o,--out", harvest_out, "output directory");

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 42;
  std::string synth_format = "jsonlines";
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted structure");
  synth->add_option("--spec", spec_path, "synthetic corpus spec (JSON)")->required();
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--format", synth_format, "jsonlines or csv");
  synth->add_option("-o,--out", synth_out, "output file")->required();

  std::string site_corpus, site_out, site_phrase = "data scientist";
  std::size_t per_page = 20;
  auto* site = app.add_subcommand("fixture-site", "render a corpus as a static job-portal site");
  site->add_option("--corpus", site_corpus, "corpus in JSON lines")->required();
  site->add_option("--per-page", per_page, "ads per listing page");
  site->add_option("--key-phrase", site_phrase, "search key phrase");
  site->add_option("-o,--out", site_out, "site directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config);
  }

  try {
    if (print_defaults) {
      std::cout << pipeline::defaults_ini();
      return 0;
    }
    for (const auto& [cmd, stage] : stage_apps) {
      if (cmd->parsed()) return run_stage(common, stage);
    }
    if (validate->parsed()) {
      auto errors = pipeline::validate(validate_config);
      for (const auto& e : errors) std::cout << e << '\n';
      if (errors.empty()) std::cerr << "config ok\n";
      return errors.empty() ? 0 : static_cast<int>(ExitCode::config);
    }
    if (harvest_cmd->parsed()) {
      if (!harvest_config.empty()) {
        Common c;
        c.config = harvest_config;
        crawl = load(c).crawl;
        if (!fs::path(crawl.root_url).is_absolute() && crawl.root_url.find("://") == std::string::npos &&
            !crawl.root_url.empty()) {
          crawl.root_url = (fs::absolute(harvest_config).parent_path() / crawl.root_url).string();
        }
      }
      if (root) crawl.root_url = *root;
      if (key_phrase) crawl.key_phrase = *key_phrase;
      if (workers) crawl.max_workers = *workers;
      if (rate) crawl.max_requests_per_worker_per_sec = *rate;
      if (max_pages) crawl.max_pages = *max_pages;
      auto result = harvest::crawl(crawl);
      corpus::Corpus crawled{std::move(result.documents), "harvest"};
      write_file(fs::path(harvest_out) / "corpus.jsonl", corpus::serialize_jsonlines(crawled));
      nlohmann::json skipped = nlohmann::json::array();
      for (const auto& s : result.skipped) skipped.push_back({{"reason", s.reason}, {"url", s.url}});
      write_file(fs::path(harvest_out) / "crawl.json",
                 nlohmann::json({{"discovered", result.discovered},
                                 {"skipped", skipped},
                                 {"stats", harvest::to_json(result.stats)},
                                 {"warnings", result.warnings}})
                         .dump(2) +
                     "\n");
      for (const auto& s : result.skipped) std::cerr << "skipped " << s.url << ": " << s.reason << '\n';
      std::cerr << crawled.size() << " documents, " << result.stats.fetches() << " requests\n";
      return 0;
    }
    if (synth->parsed()) {
      auto spec = corpus::synth_spec_from_json(nlohmann::json::parse(read_file(spec_path)));
      auto generated = corpus::synth_corpus(spec, synth_seed);
      auto format = corpus::parse_format(synth_format);
      write_file(synth_out, format == corpus::Format::csv ? corpus::serialize_csv(generated)
                                                          : corpus::serialize_jsonlines(generated));
      return 0;
    }
    if (site->parsed()) {
      auto parsed = corpus::parse_corpus_text(read_file(site_corpus), corpus::Format::jsonlines);
      harvest::write_fixture_site(site_out, parsed.corpus, per_page, site_phrase);
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::stage);
  }
}
