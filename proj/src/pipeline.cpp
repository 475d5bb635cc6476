#include "jobskill/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "jobskill/text.hpp"

namespace jobskill::pipeline {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

fs::path PipelineConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

std::string defaults_ini() {
  return R"([input]
source = file
path =
format = jsonlines

[harvest]
root =
key_phrase =
workers = 1
rate = 1
max_pages = none
retries = 2

[embed]
embeddings =
format = auto
stopwords =

[semgroup]
damping = 0.5
max_iterations = 200
convergence_window = 15
preference = median

[skillnet]
min_occurrence = 20
resolution = auto
restarts = 10
names =
edge_cutoff = 0.1

[mine]
min_support = 0.02
max_len = 4
min_lift = 1
top_k = 2
top_antecedents = 10

[segments]
list = all, fresher, experienced, high_vacancy, high_application
vacancy_threshold = 4
high_application_percentile = 90

[analyze]
gazetteer =

[output]
dir = out

[global]
seed = 42
threads = 0
)";
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"input", {"source", "path", "format"}},
      {"harvest", {"root", "key_phrase", "workers", "rate", "max_pages", "retries"}},
      {"embed", {"embeddings", "format", "stopwords"}},
      {"semgroup", {"damping", "max_iterations", "convergence_window", "preference"}},
      {"skillnet", {"min_occurrence", "resolution", "restarts", "names", "edge_cutoff"}},
      {"mine", {"min_support", "max_len", "min_lift", "top_k", "top_antecedents"}},
      {"segments", {"list", "vacancy_threshold", "high_application_percentile"}},
      {"analyze", {"gazetteer"}},
      {"output", {"dir"}},
      {"global", {"seed", "threads"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::vector<std::string>& errors) : tree_(tree), errors_(errors) {}

  std::optional<std::string> text(const std::string& section, const std::string& key) const {
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    return std::string(trim(*value));
  }

  void string(const std::string& section, const std::string& key, std::string& out) const {
    if (auto v = text(section, key)) out = *v;
  }

  void path(const std::string& section, const std::string& key, fs::path& out) const {
    if (auto v = text(section, key)) out = *v;
  }

  template <typename T>
  void integer(const std::string& section, const std::string& key, T& out) const {
    auto v = text(section, key);
    if (!v) return;
    if (auto parsed = parse_integer<T>(*v)) {
      out = *parsed;
    } else {
      error(section, key, "'" + *v + "' is not an integer");
    }
  }

  void real(const std::string& section, const std::string& key, double& out) const {
    auto v = text(section, key);
    if (!v) return;
    if (auto parsed = parse_real(*v)) {
      out = *parsed;
    } else {
      error(section, key, "'" + *v + "' is not a number");
    }
  }

  // "auto"-style keyword or a number.
  void optional_real(const std::string& section, const std::string& key, std::string_view keyword,
                     std::optional<double>& out) const {
    auto v = text(section, key);
    if (!v) return;
    if (normalize_text(*v) == keyword) {
      out.reset();
    } else if (auto parsed = parse_real(*v)) {
      out = *parsed;
    } else {
      error(section, key, "'" + *v + "' is neither '" + std::string(keyword) + "' nor a number");
    }
  }

  void error(const std::string& section, const std::string& key, const std::string& message) const {
    errors_.push_back(section + "." + key + ": " + message);
  }

  template <typename T>
  static std::optional<T> parse_integer(std::string_view s) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
  }

  static std::optional<double> parse_real(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
    return v;
  }

 private:
  const pt::ptree& tree_;
  std::vector<std::string>& errors_;
};

}  // namespace

ConfigLoad load_config(const fs::path& path) {
  ConfigLoad out;
  auto& c = out.config;
  auto& errors = out.errors;
  c.base_dir = fs::absolute(path).parent_path();

  pt::ptree tree;
  try {
    std::ifstream in(path);
    if (!in) {
      errors.push_back("config: cannot open " + path.string());
      return out;
    }
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    errors.push_back("config: line " + std::to_string(e.line()) + ": " + e.message());
    return out;
  }

  for (const auto& [section, body] : tree) {
    auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      errors.push_back(section + (body.empty() ? ": key outside of any section" : ": unknown section"));
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) errors.push_back(section + "." + key + ": unknown key");
    }
  }

  Reader r(tree, errors);

  if (auto v = r.text("input", "source")) {
    auto n = normalize_text(*v);
    if (n == "file") {
      c.source = Source::file;
    } else if (n == "harvest") {
      c.source = Source::harvest;
    } else {
      r.error("input", "source", "'" + *v + "' is not one of file, harvest");
    }
  }
  r.path("input", "path", c.input_path);
  if (auto v = r.text("input", "format")) {
    try {
      c.input_format = corpus::parse_format(*v);
    } catch (const Error&) {
      r.error("input", "format", "'" + *v + "' is not one of jsonlines, csv");
    }
  }

  r.string("harvest", "root", c.crawl.root_url);
  r.string("harvest", "key_phrase", c.crawl.key_phrase);
  r.integer("harvest", "workers", c.crawl.max_workers);
  r.real("harvest", "rate", c.crawl.max_requests_per_worker_per_sec);
  if (auto v = r.text("harvest", "max_pages"); v && normalize_text(*v) != "none") {
    if (auto parsed = Reader::parse_integer<int>(*v)) {
      c.crawl.max_pages = *parsed;
    } else {
      r.error("harvest", "max_pages", "'" + *v + "' is neither 'none' nor an integer");
    }
  }
  r.integer("harvest", "retries", c.crawl.retries);

  r.path("embed", "embeddings", c.embeddings);
  if (auto v = r.text("embed", "format")) {
    auto n = normalize_text(*v);
    if (n == "auto") {
      c.embeddings_format = embed::EmbeddingFormat::automatic;
    } else if (n == "text") {
      c.embeddings_format = embed::EmbeddingFormat::text;
    } else if (n == "binary") {
      c.embeddings_format = embed::EmbeddingFormat::binary;
    } else {
      r.error("embed", "format", "'" + *v + "' is not one of auto, text, binary");
    }
  }
  r.path("embed", "stopwords", c.stopwords);

  r.real("semgroup", "damping", c.ap.damping);
  r.integer("semgroup", "max_iterations", c.ap.max_iterations);
  r.integer("semgroup", "convergence_window", c.ap.convergence_window);
  r.optional_real("semgroup", "preference", "median", c.ap.preference);

  r.integer("skillnet", "min_occurrence", c.min_occurrence);
  r.optional_real("skillnet", "resolution", "auto", c.resolution);
  r.integer("skillnet", "restarts", c.restarts);
  r.path("skillnet", "names", c.names);
  r.real("skillnet", "edge_cutoff", c.edge_cutoff);

  r.real("mine", "min_support", c.min_support);
  r.integer("mine", "max_len", c.max_len);
  r.real("mine", "min_lift", c.min_lift);
  r.integer("mine", "top_k", c.top_k);
  r.integer("mine", "top_antecedents", c.top_antecedents);

  if (auto v = r.text("segments", "list")) {
    std::vector<mine::Segment> segments;
    for (const auto& piece : split(*v, ',')) {
      auto name = normalize_text(piece);
      if (name.empty()) continue;
      try {
        auto seg = mine::parse_segment(name);
        if (std::find(segments.begin(), segments.end(), seg) == segments.end()) segments.push_back(seg);
      } catch (const Error&) {
        r.error("segments", "list", "unknown segment '" + name + "'");
      }
    }
    c.segments = std::move(segments);
  }
  r.integer("segments", "vacancy_threshold", c.segment_options.vacancy_threshold);
  r.real("segments", "high_application_percentile", c.segment_options.application_percentile);

  r.path("analyze", "gazetteer", c.gazetteer);
  r.path("output", "dir", c.output_dir);
  r.integer("global", "seed", c.seed);
  r.integer("global", "threads", c.threads);
  return out;
}

namespace {

void require_file(std::vector<std::string>& errors, const PipelineConfig& c, const std::string& key,
                  const fs::path& p, bool required) {
  if (p.empty()) {
    if (required) errors.push_back(key + ": missing (required)");
    return;
  }
  std::error_code ec;
  if (!fs::is_regular_file(c.resolve(p), ec)) errors.push_back(key + ": file not found: " + c.resolve(p).string());
}

}  // namespace

std::vector<std::string> check_config(const PipelineConfig& c) {
  std::vector<std::string> errors;
  if (c.source == Source::file) {
    require_file(errors, c, "input.path", c.input_path, true);
  } else {
    for (auto& e : c.crawl.check()) errors.push_back(e);
  }
  require_file(errors, c, "embed.embeddings", c.embeddings, true);
  require_file(errors, c, "embed.stopwords", c.stopwords, false);
  for (auto& e : c.ap.check()) errors.push_back(e);

  if (c.min_occurrence < 1) errors.push_back("skillnet.min_occurrence: must be at least 1");
  if (c.resolution && !(*c.resolution > 0.0)) errors.push_back("skillnet.resolution: must be positive");
  if (c.restarts < 1) errors.push_back("skillnet.restarts: must be at least 1");
  require_file(errors, c, "skillnet.names", c.names, false);
  if (!(c.edge_cutoff >= 0.0 && c.edge_cutoff <= 1.0)) errors.push_back("skillnet.edge_cutoff: outside [0, 1]");

  if (!(c.min_support > 0.0 && c.min_support <= 1.0)) errors.push_back("mine.min_support: outside (0, 1]");
  if (c.max_len < 1 || c.max_len > 16) errors.push_back("mine.max_len: outside [1, 16]");
  if (!(c.min_lift >= 0.0)) errors.push_back("mine.min_lift: must not be negative");
  if (c.top_k < 1) errors.push_back("mine.top_k: must be at least 1");
  if (c.top_antecedents < 1) errors.push_back("mine.top_antecedents: must be at least 1");

  if (c.segments.empty()) errors.push_back("segments.list: no segment selected");
  if (c.segment_options.vacancy_threshold < 0) errors.push_back("segments.vacancy_threshold: must not be negative");
  const double p = c.segment_options.application_percentile;
  if (!(p > 0.0 && p <= 100.0)) errors.push_back("segments.high_application_percentile: outside (0, 100]");

  require_file(errors, c, "analyze.gazetteer", c.gazetteer, true);
  if (c.output_dir.empty()) errors.push_back("output.dir: must not be empty");
  return errors;
}

std::vector<std::string> validate(const fs::path& path) {
  auto loaded = load_config(path);
  auto errors = std::move(loaded.errors);
  if (errors.size() == 1 && errors.front().rfind("config:", 0) == 0) return errors;
  for (auto& e : check_config(loaded.config)) errors.push_back(std::move(e));
  return errors;
}

json config_to_json(const PipelineConfig& c) {
  json segments = json::array();
  for (auto s : c.segments) segments.push_back(mine::segment_name(s));
  auto opt = [](const std::optional<double>& v, const char* keyword) { return v ? json(*v) : json(keyword); };
  const char* formats[] = {"auto", "text", "binary"};
  return {{"input",
           {{"source", c.source == Source::file ? "file" : "harvest"},
            {"path", c.input_path.generic_string()},
            {"format", c.input_format == corpus::Format::csv ? "csv" : "jsonlines"}}},
          {"harvest",
           {{"root", c.crawl.root_url},
            {"key_phrase", c.crawl.key_phrase},
            {"workers", c.crawl.max_workers},
            {"rate", c.crawl.max_requests_per_worker_per_sec},
            {"max_pages", c.crawl.max_pages ? json(*c.crawl.max_pages) : json("none")},
            {"retries", c.crawl.retries}}},
          {"embed",
           {{"embeddings", c.embeddings.generic_string()},
            {"format", formats[static_cast<int>(c.embeddings_format)]},
            {"stopwords", c.stopwords.generic_string()}}},
          {"semgroup",
           {{"damping", c.ap.damping},
            {"max_iterations", c.ap.max_iterations},
            {"convergence_window", c.ap.convergence_window},
            {"preference", opt(c.ap.preference, "median")}}},
          {"skillnet",
           {{"min_occurrence", c.min_occurrence},
            {"resolution", opt(c.resolution, "auto")},
            {"restarts", c.restarts},
            {"names", c.names.generic_string()},
            {"edge_cutoff", c.edge_cutoff}}},
          {"mine",
           {{"min_support", c.min_support},
            {"max_len", c.max_len},
            {"min_lift", c.min_lift},
            {"top_k", c.top_k},
            {"top_antecedents", c.top_antecedents}}},
          {"segments",
           {{"list", segments},
            {"vacancy_threshold", c.segment_options.vacancy_threshold},
            {"high_application_percentile", c.segment_options.application_percentile}}},
          {"analyze", {{"gazetteer", c.gazetteer.generic_string()}}},
          {"output", {{"dir", c.output_dir.generic_string()}}},
          {"global", {{"seed", c.seed}}}};
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::preprocess: return "preprocess";
    case Stage::titles: return "cluster-titles";
    case Stage::skills: return "cluster-skills";
    case Stage::mine: return "mine";
    case Stage::analyze: return "analyze";
    case Stage::report: return "report";
  }
  return "report";
}

StageFailure::StageFailure(Stage stage, const std::string& cause, ExitCode code)
    : Error("stage " + std::string(stage_name(stage)) + " failed: " + cause), stage_(stage), code_(code) {}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string pad(std::string s, std::size_t width) {
  // Pads by code points so arrows and accents line up.
  std::size_t chars = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++chars;
  if (chars < width) s.append(width - chars, ' ');
  return s;
}

struct SegmentMining {
  mine::Segment segment;
  mine::SegmentSelection selection;
  std::vector<mine::FrequentItemset> itemsets;
  std::vector<mine::AssociationRule> rules;
  std::map<mine::Itemset, std::vector<mine::AssociationRule>> top;
  std::optional<std::string> warning;
};

class Runner {
 public:
  Runner(const PipelineConfig& config, RunResult& result)
      : c_(config), out_(config.resolve(config.output_dir)), result_(result) {}

  void through(Stage target) {
    switch (target) {
      case Stage::ingest: ingest(); break;
      case Stage::preprocess: preprocess(); break;
      case Stage::titles: titles(); break;
      case Stage::skills: skills(); break;
      case Stage::mine: mining(); break;
      case Stage::analyze: analysis(); break;
      case Stage::report: report(); break;
    }
  }

 private:
  template <typename F>
  void stage(Stage s, bool& done, F&& body) {
    if (done) return;
    try {
      body();
    } catch (const StageFailure&) {
      throw;
    } catch (const Error& e) {
      throw StageFailure(s, e.what(), e.exit_code() == ExitCode::data ? ExitCode::data : ExitCode::stage);
    } catch (const std::exception& e) {
      throw StageFailure(s, e.what(), ExitCode::stage);
    }
    done = true;
    result_.stages.emplace_back(stage_name(s));
  }

  void emit(const fs::path& rel, std::string_view content) {
    write_file(out_ / rel, content);
    result_.artifacts.push_back(rel);
  }

  void warn(std::string message) {
    std::cerr << "warning: " << message << '\n';
    result_.warnings.push_back(std::move(message));
  }

  std::optional<json> cache_load(std::string_view stage, const std::string& key) {
    auto path = out_ / "cache" / (std::string(stage) + "-" + key + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return std::nullopt;
    try {
      return json::parse(read_file(path));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void cache_store(std::string_view stage, const std::string& key, const json& payload) {
    write_file(out_ / "cache" / (std::string(stage) + "-" + key + ".json"), payload.dump());
  }

  std::string file_hash(const fs::path& p) { return p.empty() ? std::string() : sha256_hex(read_file(c_.resolve(p))); }

  // -------------------------------------------------------------------------

  void ingest() {
    stage(Stage::ingest, ingested_, [&] {
      corpus::ParseResult parsed;
      json info;
      if (c_.source == Source::file) {
        auto path = c_.resolve(c_.input_path);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open corpus " + path.string());
        parsed = corpus::parse_corpus(in, c_.input_format, path.filename().string());
        info["source"] = "file";
        info["path"] = c_.input_path.generic_string();
      } else {
        auto crawled = harvest::crawl(c_.crawl);
        corpus::Corpus crawled_corpus{std::move(crawled.documents), "harvest"};
        parsed = corpus::parse_corpus_text(corpus::serialize_jsonlines(crawled_corpus), corpus::Format::jsonlines,
                                           "harvest");
        for (const auto& s : crawled.skipped) warn("harvest skipped " + s.url + ": " + s.reason);
        for (const auto& w : crawled.warnings) warn(w);
        info["source"] = "harvest";
        info["fetches"] = crawled.stats.fetches();
        info["discovered"] = crawled.discovered.size();
        info["skipped_pages"] = crawled.skipped.size();
      }
      if (parsed.corpus.ads.empty()) throw DataError("corpus has no valid advertisements");
      json diagnostics = json::array();
      for (const auto& d : parsed.diagnostics) diagnostics.push_back({{"record", d.record}, {"message", d.message}});
      if (parsed.skipped > 0) warn(std::to_string(parsed.skipped) + " malformed records skipped during ingest");
      info["ads"] = parsed.corpus.size();
      info["skipped"] = parsed.skipped;
      info["diagnostics"] = diagnostics;
      corpus_ = std::move(parsed.corpus);
      corpus_jsonl_ = corpus::serialize_jsonlines(corpus_);
      ingest_info_ = info;
      emit("corpus.jsonl", corpus_jsonl_);
      emit("ingest.json", dump(info));
    });
  }

  void preprocess() {
    ingest();
    stage(Stage::preprocess, preprocessed_, [&] {
      std::map<std::string, std::size_t> title_counts;
      for (const auto& ad : corpus_.ads) {
        titles_.push_back(normalize_text(ad.job_name));
        ++title_counts[titles_.back()];
      }
      std::string titles_csv = csv::join_row({"title", "count"});
      for (const auto& [t, n] : title_counts) titles_csv += csv::join_row({t, std::to_string(n)});
      emit("preprocess/titles.csv", titles_csv);

      vocab_ = skillnet::filter_skills(corpus_, c_.min_occurrence);
      std::string vocab_csv = csv::join_row({"skill", "ads"});
      for (const auto& s : vocab_.skills) vocab_csv += csv::join_row({s, std::to_string(vocab_.occurrence.at(s))});
      emit("preprocess/skill_vocabulary.csv", vocab_csv);

      std::set<std::string> all_skills;
      for (const auto& ad : corpus_.ads) all_skills.insert(ad.key_skills.begin(), ad.key_skills.end());
      preprocess_info_ = {{"unique_titles", title_counts.size()},
                          {"distinct_skills", all_skills.size()},
                          {"vocabulary", vocab_.size()},
                          {"min_occurrence", c_.min_occurrence}};
      emit("preprocess/summary.json", dump(preprocess_info_));
    });
  }

  void titles() {
    preprocess();
    stage(Stage::titles, titled_, [&] {
      std::vector<std::string> unique(titles_.begin(), titles_.end());
      std::sort(unique.begin(), unique.end());
      unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
      json key_material = {{"stage", "titles"},
                           {"version", kVersion},
                           {"titles", unique},
                           {"embeddings", file_hash(c_.embeddings)},
                           {"embeddings_format", static_cast<int>(c_.embeddings_format)},
                           {"stopwords", file_hash(c_.stopwords)},
                           {"ap", config_to_json(c_)["semgroup"]}};
      const auto key = sha256_hex(key_material.dump());
      json payload;
      if (auto cached = cache_load("titles", key)) {
        payload = std::move(*cached);
        result_.cache_hits["cluster-titles"] = true;
        std::cerr << "cluster-titles: reusing cached artifact " << key.substr(0, 12) << '\n';
      } else {
        result_.cache_hits["cluster-titles"] = false;
        embed::StopWords stopwords;
        if (!c_.stopwords.empty()) stopwords = embed::load_stopwords(c_.resolve(c_.stopwords));
        std::unordered_set<std::string> needed;
        for (const auto& t : unique)
          for (auto& tok : embed::tokenize(t, stopwords)) needed.insert(std::move(tok));
        auto store = embed::load_embeddings(c_.resolve(c_.embeddings), c_.embeddings_format, &needed);
        auto pairwise = embed::pairwise_distances(unique, store, stopwords, {c_.threads});
        auto clustering = semgroup::affinity_propagation(pairwise.matrix, c_.ap);
        json oov = json::object();
        for (const auto& [value, tokens] : pairwise.oov) oov[value] = tokens;
        payload = {{"distances_csv", embed::distance_matrix_csv(pairwise.matrix)},
                   {"clustering", semgroup::to_json(clustering)},
                   {"oov", oov},
                   {"empty_docs", pairwise.empty_docs}};
        cache_store("titles", key, payload);
      }
      title_clustering_ = semgroup::clustering_from_json(payload.at("clustering"));
      semgroup::elect_leaders(title_clustering_, titles_);
      if (!payload.at("oov").empty()) {
        warn(std::to_string(payload.at("oov").size()) + " job titles contain tokens without an embedding");
      }
      if (!payload.at("empty_docs").empty()) {
        warn(std::to_string(payload.at("empty_docs").size()) +
             " job titles have no embedded token and were compared by string equality");
      }
      if (!title_clustering_.converged) {
        warn("affinity propagation did not converge within " + std::to_string(c_.ap.max_iterations) + " iterations");
      }
      emit("titles/distances.csv", payload.at("distances_csv").get<std::string>());
      emit("titles/oov.json", dump({{"empty_docs", payload.at("empty_docs")}, {"oov", payload.at("oov")}}));
      emit("titles/clusters.json", dump(semgroup::to_json(title_clustering_)));
      emit("titles/assignments.csv", semgroup::assignments_csv(title_clustering_));
    });
  }

  void skills() {
    preprocess();
    stage(Stage::skills, skilled_, [&] {
      json key_material = {{"stage", "skills"},
                           {"version", kVersion},
                           {"corpus", sha256_hex(corpus_jsonl_)},
                           {"min_occurrence", c_.min_occurrence},
                           {"resolution", c_.resolution ? json(*c_.resolution) : json("auto")},
                           {"restarts", c_.restarts},
                           {"seed", c_.seed},
                           {"edge_cutoff", c_.edge_cutoff}};
      const auto key = sha256_hex(key_material.dump());
      json payload;
      if (auto cached = cache_load("skills", key)) {
        payload = std::move(*cached);
        result_.cache_hits["cluster-skills"] = true;
        std::cerr << "cluster-skills: reusing cached artifact " << key.substr(0, 12) << '\n';
      } else {
        result_.cache_hits["cluster-skills"] = false;
        auto matrix = skillnet::build_matrix(corpus_, vocab_);
        auto similarity = skillnet::cosine_matrix(matrix);
        skillnet::ClusterOptions options;
        options.resolution = c_.resolution;
        options.seed = c_.seed;
        options.restarts = c_.restarts;
        options.threads = c_.threads;
        auto clusters = skillnet::cluster_skills(similarity, options);
        payload = {{"similarity_csv", skillnet::similarity_csv(similarity)},
                   {"edges_csv", skillnet::edge_list_csv(similarity, c_.edge_cutoff)},
                   {"clusters", skillnet::to_json(clusters)},
                   {"ads_without_vocabulary_skill", matrix.zero_rows.size()}};
        cache_store("skills", key, payload);
      }
      skill_clusters_ = skillnet::cluster_set_from_json(payload.at("clusters"));
      if (!c_.names.empty()) {
        auto names = skillnet::parse_names(read_file(c_.resolve(c_.names)));
        for (auto& w : skillnet::apply_names(skill_clusters_, names)) warn(std::move(w));
      }
      ads_without_vocab_ = payload.at("ads_without_vocabulary_skill").get<std::size_t>();
      emit("skills/similarity.csv", payload.at("similarity_csv").get<std::string>());
      emit("skills/edges.csv", payload.at("edges_csv").get<std::string>());
      emit("skills/clusters.json", dump(skillnet::to_json(skill_clusters_)));
      emit("skills/clusters.csv", skillnet::clusters_csv(skill_clusters_));
    });
  }

  void mining() {
    preprocess();
    stage(Stage::mine, mined_, [&] {
      json summary = json::object();
      for (auto segment : c_.segments) {
        SegmentMining m;
        m.segment = segment;
        auto baskets = mine::segment_baskets(corpus_, vocab_, segment, c_.segment_options);
        m.selection = baskets.selection;
        const std::string name(mine::segment_name(segment));
        const fs::path dir = fs::path("mine") / name;
        if (baskets.warning) {
          m.warning = baskets.warning;
          warn(*baskets.warning);
        } else {
          m.itemsets = mine::apriori(baskets.transactions, c_.min_support, c_.max_len);
          m.rules = mine::generate_rules(m.itemsets, baskets.transactions, c_.min_lift);
          m.top = mine::top_recommendations(m.rules, c_.top_k, vocab_);
        }
        emit(dir / "itemsets.csv", mine::itemsets_csv(m.itemsets, vocab_));
        emit(dir / "rules.csv", mine::rules_csv(m.rules, vocab_));
        std::string lines;
        for (const auto& antecedent : ranked_antecedents(m, m.top.size()))
          for (const auto& r : m.top.at(antecedent)) lines += mine::format_rule(r, vocab_) + "\n";
        emit(dir / "recommendations.txt", lines);
        json entry = {{"ads", m.selection.ads.size()},
                      {"itemsets", m.itemsets.size()},
                      {"rules", m.rules.size()}};
        if (m.selection.mean_min_experience) entry["mean_min_experience"] = *m.selection.mean_min_experience;
        if (m.selection.apply_count_threshold) entry["apply_count_threshold"] = *m.selection.apply_count_threshold;
        if (m.warning) entry["warning"] = *m.warning;
        summary[name] = entry;
        mining_.push_back(std::move(m));
      }
      emit("mine/segments.json", dump(summary));
    });
  }

  // Antecedents ordered by their own support (descending), then by name.
  std::vector<mine::Itemset> ranked_antecedents(const SegmentMining& m, std::size_t limit) const {
    std::vector<std::pair<std::size_t, mine::Itemset>> ranked;
    for (const auto& [antecedent, rules] : m.top) ranked.emplace_back(rules.front().count_antecedent, antecedent);
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
      return mine::item_names(a.second, vocab_) < mine::item_names(b.second, vocab_);
    });
    std::vector<mine::Itemset> out;
    for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) out.push_back(ranked[i].second);
    return out;
  }

  void analysis() {
    titles();
    skills();
    stage(Stage::analyze, analyzed_, [&] {
      for (auto field : {analyze::Field::job_leader, analyze::Field::skill, analyze::Field::industry,
                         analyze::Field::role_category}) {
        auto table = analyze::frequency_table(corpus_, field, &title_clustering_);
        emit(fs::path("analysis") / ("frequency_" + std::string(analyze::field_name(field)) + ".csv"),
             analyze::frequency_csv(table));
        frequency_.push_back(std::move(table));
      }
      auto gazetteer = analyze::load_gazetteer(c_.resolve(c_.gazetteer));
      json distributions = json::object();
      for (auto segment : c_.segments) {
        const std::string name(mine::segment_name(segment));
        auto selection = mine::select_segment(corpus_, segment, c_.segment_options);
        auto dist = analyze::cluster_distribution(corpus_, skill_clusters_, &selection.ads);
        distributions[name] = analyze::to_json(dist);
        auto geo = analyze::geo_aggregate(corpus_, gazetteer, skill_clusters_, &selection.ads, name);
        if (segment == mine::Segment::all && geo.ads_unresolved > 0) {
          warn(std::to_string(geo.ads_unresolved) + " ads have no location found in the gazetteer");
        }
        emit(fs::path("analysis") / ("geo_" + name + ".geojson"), dump(analyze::to_geojson(geo)));
        distributions_[name] = std::move(dist);
        geo_[name] = std::move(geo);
      }
      emit("analysis/cluster_distribution.json", dump(distributions));
    });
  }

  void report() {
    titles();
    skills();
    mining();
    analysis();
    stage(Stage::report, reported_, [&] {
      json rep;
      rep["version"] = kVersion;
      auto settings = config_to_json(c_);
      settings.erase("output");
      rep["config_hash"] = sha256_hex(settings.dump());
      rep["seed"] = c_.seed;
      rep["corpus"] = {{"ads", corpus_.size()},
                       {"skipped_records", ingest_info_.at("skipped")},
                       {"unique_titles", preprocess_info_.at("unique_titles")},
                       {"distinct_skills", preprocess_info_.at("distinct_skills")},
                       {"vocabulary", vocab_.size()},
                       {"ads_without_vocabulary_skill", ads_without_vocab_}};

      json title_groups = json::array();
      auto folded = semgroup::fold_counts(titles_, title_clustering_);
      for (const auto& c : title_clustering_.clusters) {
        title_groups.push_back({{"leader", *c.leader},
                                {"exemplar", c.exemplar},
                                {"members", c.members},
                                {"ads", folded.at(*c.leader)}});
      }
      rep["title_clusters"] = {{"count", title_clustering_.clusters.size()},
                               {"converged", title_clustering_.converged},
                               {"iterations", title_clustering_.iterations},
                               {"preference", title_clustering_.preference},
                               {"groups", title_groups}};
      rep["skill_clusters"] = skillnet::to_json(skill_clusters_);

      json freq = json::object();
      for (const auto& t : frequency_) freq[t.field] = analyze::to_json(t);
      rep["frequency"] = freq;

      json segments = json::object();
      for (const auto& m : mining_) {
        const std::string name(mine::segment_name(m.segment));
        json by_size = json::object();
        for (const auto& [size, sets] : top_itemsets(m, 2)) {
          json list = json::array();
          for (const auto* f : sets) {
            list.push_back({{"items", mine::item_names(f->items, vocab_)}, {"count", f->count}, {"support", f->support()}});
          }
          by_size[std::to_string(size)] = list;
        }
        json recs = json::array();
        for (const auto& antecedent : ranked_antecedents(m, c_.top_antecedents)) {
          for (const auto& r : m.top.at(antecedent)) {
            recs.push_back({{"antecedent", mine::item_names(r.antecedent, vocab_)},
                            {"consequent", mine::item_names(r.consequent, vocab_)},
                            {"support", r.support},
                            {"confidence", r.confidence},
                            {"lift", r.lift},
                            {"line", mine::format_rule(r, vocab_)}});
          }
        }
        json entry = {{"ads", m.selection.ads.size()},
                      {"itemsets", m.itemsets.size()},
                      {"rules", m.rules.size()},
                      {"top_itemsets", by_size},
                      {"recommendations", recs}};
        if (auto it = distributions_.find(name); it != distributions_.end()) {
          entry["cluster_distribution"] = analyze::to_json(it->second);
        }
        if (auto it = geo_.find(name); it != geo_.end()) {
          json buckets = json::array();
          for (const auto& b : it->second.buckets) {
            buckets.push_back({{"city", b.city}, {"region", b.region}, {"ad_count", b.ad_count}});
          }
          entry["geo"] = {{"buckets", buckets},
                          {"ads_with_location", it->second.ads_with_location},
                          {"ads_resolved", it->second.ads_resolved},
                          {"ads_unresolved", it->second.ads_unresolved}};
        }
        if (m.warning) entry["warning"] = *m.warning;
        segments[name] = entry;
      }
      rep["segments"] = segments;
      emit("report.json", dump(rep));
      emit("report.txt", report_text());
    });
  }

  std::map<std::size_t, std::vector<const mine::FrequentItemset*>> top_itemsets(const SegmentMining& m,
                                                                                std::size_t per_size) const {
    std::map<std::size_t, std::vector<const mine::FrequentItemset*>> by_size;
    for (const auto& f : m.itemsets) by_size[f.items.size()].push_back(&f);
    for (auto& [size, list] : by_size) {
      std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) { return a->count > b->count; });
      if (list.size() > per_size) list.resize(per_size);
    }
    return by_size;
  }

  std::string rank_table(const std::string& title, const std::string& column,
                         const std::vector<std::pair<std::string, std::size_t>>& rows, std::size_t limit) const {
    std::size_t width = column.size();
    for (std::size_t i = 0; i < rows.size() && i < limit; ++i) width = std::max(width, rows[i].first.size());
    std::string out = title + "\n" + pad("rank", 6) + pad(column, width + 2) + "count\n";
    for (std::size_t i = 0; i < rows.size() && i < limit; ++i) {
      out += pad(std::to_string(i + 1), 6) + pad(rows[i].first, width + 2) + std::to_string(rows[i].second) + "\n";
    }
    return out + "\n";
  }

  std::string report_text() const {
    std::string out = "jobskill report " + std::string(kVersion) + "\n";
    out += "ads: " + std::to_string(corpus_.size()) + ", title groups: " +
           std::to_string(title_clustering_.clusters.size()) + ", skills retained: " + std::to_string(vocab_.size()) +
           ", skill clusters: " + std::to_string(skill_clusters_.clusters.size()) + "\n\n";

    const std::pair<analyze::Field, const char*> headings[] = {
        {analyze::Field::job_leader, "Most frequent job titles"},
        {analyze::Field::industry, "Most frequent industries"},
        {analyze::Field::role_category, "Most frequent role categories"},
        {analyze::Field::skill, "Most frequent skills"}};
    const char* columns[] = {"job title", "skill", "industry", "role category"};
    for (const auto& [field, heading] : headings) {
      for (const auto& t : frequency_) {
        if (t.field != analyze::field_name(field)) continue;
        std::vector<std::pair<std::string, std::size_t>> rows;
        for (const auto& r : t.rows) rows.emplace_back(r.label, r.count);
        out += rank_table(heading, columns[static_cast<int>(field)], rows, 10);
      }
    }

    out += "Skill clusters\n";
    for (const auto& c : skill_clusters_.clusters) {
      out += "  " + c.display_name() + " (" + std::to_string(c.members.size()) + "): ";
      for (std::size_t i = 0; i < c.members.size(); ++i) out += (i ? ", " : "") + c.members[i];
      out += "\n";
    }
    out += "\n";

    for (const auto& m : mining_) {
      const std::string name(mine::segment_name(m.segment));
      out += "Segment " + name + " (" + std::to_string(m.selection.ads.size()) + " ads)\n";
      if (m.warning) {
        out += "  " + *m.warning + "\n\n";
        continue;
      }
      out += "Frequent itemsets\n";
      for (const auto& [size, sets] : top_itemsets(m, 2)) {
        out += "  " + std::to_string(size) + ": ";
        for (std::size_t i = 0; i < sets.size(); ++i) {
          auto names = mine::item_names(sets[i]->items, vocab_);
          std::string joined;
          for (std::size_t q = 0; q < names.size(); ++q) joined += (q ? ", " : "") + names[q];
          out += (i ? "; " : "") + std::string("{") + joined + "} " + format_fixed(sets[i]->support(), 3);
        }
        out += "\n";
      }
      out += "Recommendations\n";
      for (const auto& antecedent : ranked_antecedents(m, c_.top_antecedents))
        for (const auto& r : m.top.at(antecedent)) out += "  " + mine::format_rule(r, vocab_) + "\n";
      out += "\n";
    }
    return out;
  }

  const PipelineConfig& c_;
  fs::path out_;
  RunResult& result_;

  bool ingested_ = false, preprocessed_ = false, titled_ = false, skilled_ = false, mined_ = false,
       analyzed_ = false, reported_ = false;

  corpus::Corpus corpus_;
  std::string corpus_jsonl_;
  json ingest_info_;
  json preprocess_info_;
  std::vector<std::string> titles_;
  skillnet::SkillVocab vocab_;
  semgroup::SemanticClustering title_clustering_;
  skillnet::SkillClusterSet skill_clusters_;
  std::size_t ads_without_vocab_ = 0;
  std::vector<SegmentMining> mining_;
  std::vector<analyze::FrequencyTable> frequency_;
  std::map<std::string, analyze::ClusterDistribution> distributions_;
  std::map<std::string, analyze::GeoAggregate> geo_;
};

}  // namespace

RunResult run(const PipelineConfig& config, Stage target) {
  if (auto errors = check_config(config); !errors.empty()) {
    std::string message = "invalid config";
    for (const auto& e : errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  RunResult result;
  Runner runner(config, result);
  runner.through(target);
  return result;
}

}  // namespace jobskill::pipeline
