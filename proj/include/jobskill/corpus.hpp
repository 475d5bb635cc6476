#pragma once

// Job advertisement data model, corpus parsing/serialization and the
// planted-structure synthetic generator.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace jobskill::corpus {

struct JobAd {
  std::string id;
  std::string job_name;
  std::string company_name;
  std::optional<std::chrono::year_month_day> advertisement_date;
  std::optional<std::int64_t> apply_count;
  std::optional<std::int64_t> view_count;
  std::string role_category;
  std::vector<std::string> education;
  std::string industry;
  std::optional<std::int64_t> min_experience;
  std::optional<std::int64_t> max_experience;
  std::string employment_type;
  std::string functional_area;
  std::vector<std::string> locations;
  // Casefolded, trimmed, whitespace-collapsed and deduplicated (first occurrence wins).
  std::vector<std::string> key_skills;
  std::optional<std::int64_t> vacancy;
  std::vector<std::string> salary;
  std::string description;

  bool operator==(const JobAd&) const = default;
};

struct Corpus {
  std::vector<JobAd> ads;
  std::string source_tag;

  std::size_t size() const { return ads.size(); }
  bool operator==(const Corpus&) const = default;
};

enum class Format { jsonlines, csv };

Format parse_format(std::string_view name);

struct Diagnostic {
  std::size_t record = 0;  // 1-based record number in the input
  std::string message;
};

struct ParseResult {
  Corpus corpus;
  std::size_t skipped = 0;
  std::vector<Diagnostic> diagnostics;
};

// Skill normalization: casefold, trim, collapse internal whitespace.
std::string normalize_skill(std::string_view raw);

// Parses "YYYY-MM-DD" or the day-first fallback "DD-MM-YYYY" / "DD/MM/YYYY".
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);
std::string format_date(const std::chrono::year_month_day& date);

// Validates one JSON object against the JobAd schema. Throws SchemaError
// with a message naming the offending field.
JobAd job_ad_from_json(const nlohmann::json& record);
nlohmann::json to_json(const JobAd& ad);

// Throws IoError on stream failure and SchemaError when more than half of the
// records are malformed.
ParseResult parse_corpus(std::istream& input, Format format, std::string source_tag = {});
ParseResult parse_corpus_text(std::string_view text, Format format, std::string source_tag = {});

// Canonical JSON-lines: one object per ad, sorted keys, nulls for missing values.
std::string serialize_jsonlines(const Corpus& corpus);
std::string serialize_csv(const Corpus& corpus);

// Synthetic corpora with planted structure.
struct PlantedPair {
  std::string first;
  std::string second;
  double joint = 0.0;
};

struct TitleGroup {
  // Exact number of ads carrying each title variant.
  std::vector<std::pair<std::string, std::size_t>> titles;
};

struct SynthSpec {
  std::size_t ads = 0;  // 0 means "sum of title counts"
  std::vector<std::pair<std::string, double>> skill_marginals;
  std::vector<PlantedPair> pairs;
  std::vector<TitleGroup> title_groups;
  std::vector<std::pair<std::string, double>> city_weights;
  double second_location_rate = 0.0;
  std::vector<std::pair<std::string, double>> industry_weights;
  std::vector<std::pair<std::string, double>> role_weights;
  std::vector<std::int64_t> min_experience_choices{0};
  std::int64_t max_experience_spread = 0;
  std::vector<std::pair<std::int64_t, double>> vacancy_weights;
  std::int64_t max_apply_count = 0;
  // Added to ads whose sampled skill set is empty, so every ad stays valid.
  std::string fallback_skill = "communication";
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);

// Throws SchemaError when the spec is infeasible (e.g. joint > marginal).
Corpus synth_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace jobskill::corpus
