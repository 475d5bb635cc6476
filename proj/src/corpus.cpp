#include "jobskill/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "jobskill/error.hpp"
#include "jobskill/random.hpp"
#include "jobskill/text.hpp"

namespace jobskill::corpus {

using nlohmann::json;

namespace {

constexpr std::string_view kTextFields[] = {"company_name", "role_category", "industry",
                                            "employment_type", "functional_area", "description"};
constexpr std::string_view kListFields[] = {"education", "locations", "key_skills", "salary"};

// Column order of CSV output, mirroring the advertisement field table.
constexpr std::string_view kCsvColumns[] = {
    "id",          "job_name",       "company_name",   "advertisement_date", "apply_count",
    "view_count",  "role_category",  "education",      "industry",           "min_experience",
    "max_experience", "employment_type", "functional_area", "locations",     "key_skills",
    "vacancy",     "salary",         "description"};

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> read_count(const json& record, std::string_view field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  std::optional<std::int64_t> value;
  if (it->is_number_integer()) {
    value = it->get<std::int64_t>();
  } else if (it->is_number_float()) {
    double d = it->get<double>();
    if (std::floor(d) == d && std::isfinite(d)) value = static_cast<std::int64_t>(d);
  } else if (it->is_string()) {
    auto s = it->get<std::string>();
    if (trim(s).empty()) return std::nullopt;
    value = parse_int(s);
  }
  if (!value) throw SchemaError(std::string(field) + ": not an integer");
  if (*value < 0) throw SchemaError(std::string(field) + ": negative value");
  return value;
}

std::string read_text(const json& record, std::string_view field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (it->is_string()) return std::string(trim(it->get<std::string>()));
  if (it->is_number()) return it->dump();
  throw SchemaError(std::string(field) + ": expected text");
}

std::vector<std::string> read_list(const json& record, std::string_view field) {
  auto it = record.find(field);
  std::vector<std::string> out;
  if (it == record.end() || it->is_null()) return out;
  auto push = [&](std::string_view v) {
    auto t = trim(v);
    if (!t.empty()) out.emplace_back(t);
  };
  if (it->is_string()) {
    for (const auto& part : split(it->get<std::string>(), '|')) push(part);
  } else if (it->is_array()) {
    for (const auto& item : *it) {
      if (!item.is_string()) throw SchemaError(std::string(field) + ": list items must be text");
      push(item.get<std::string>());
    }
  } else {
    throw SchemaError(std::string(field) + ": expected a list");
  }
  return out;
}

json optional_int(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Format parse_format(std::string_view name) {
  auto n = normalize_text(name);
  if (n == "jsonlines" || n == "jsonl" || n == "json") return Format::jsonlines;
  if (n == "csv") return Format::csv;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected jsonlines or csv)");
}

std::string normalize_skill(std::string_view raw) { return normalize_text(raw); }

std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  // Drop a time suffix such as "T10:00:00Z".
  if (auto t = text.find_first_of("T "); t != std::string_view::npos) text = text.substr(0, t);
  auto parts_dash = split(text, '-');
  auto parts = parts_dash.size() == 3 ? parts_dash : split(text, '/');
  if (parts.size() != 3) return std::nullopt;
  std::optional<std::int64_t> a = parse_int(parts[0]), b = parse_int(parts[1]), c = parse_int(parts[2]);
  if (!a || !b || !c) return std::nullopt;
  year_month_day ymd;
  if (parts[0].size() == 4) {
    ymd = year{static_cast<int>(*a)} / month{static_cast<unsigned>(*b)} / day{static_cast<unsigned>(*c)};
  } else if (parts[2].size() == 4) {
    ymd = year{static_cast<int>(*c)} / month{static_cast<unsigned>(*b)} / day{static_cast<unsigned>(*a)};
  } else {
    return std::nullopt;
  }
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_date(const std::chrono::year_month_day& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

JobAd job_ad_from_json(const json& record) {
  if (!record.is_object()) throw SchemaError("record is not an object");
  JobAd ad;
  ad.id = read_text(record, "id");
  if (ad.id.empty()) throw SchemaError("id: missing");
  ad.job_name = read_text(record, "job_name");
  if (ad.job_name.empty()) throw SchemaError("job_name: missing");
  if (!record.contains("key_skills") || record["key_skills"].is_null()) throw SchemaError("key_skills: missing");

  ad.company_name = read_text(record, "company_name");
  ad.role_category = read_text(record, "role_category");
  ad.industry = read_text(record, "industry");
  ad.employment_type = read_text(record, "employment_type");
  ad.functional_area = read_text(record, "functional_area");
  ad.description = read_text(record, "description");
  ad.education = read_list(record, "education");
  ad.locations = read_list(record, "locations");
  ad.salary = read_list(record, "salary");
  ad.apply_count = read_count(record, "apply_count");
  ad.view_count = read_count(record, "view_count");
  ad.min_experience = read_count(record, "min_experience");
  ad.max_experience = read_count(record, "max_experience");
  ad.vacancy = read_count(record, "vacancy");
  if (auto it = record.find("advertisement_date"); it != record.end() && it->is_string()) {
    ad.advertisement_date = parse_date(it->get<std::string>());
  }

  if (ad.min_experience && ad.max_experience && *ad.min_experience > *ad.max_experience) {
    throw SchemaError("experience range inverted");
  }

  std::unordered_set<std::string> seen;
  for (const auto& raw : read_list(record, "key_skills")) {
    auto skill = normalize_skill(raw);
    if (!skill.empty() && seen.insert(skill).second) ad.key_skills.push_back(std::move(skill));
  }
  if (ad.key_skills.empty()) throw SchemaError("key_skills: empty after normalization");
  return ad;
}

json to_json(const JobAd& ad) {
  json j = json::object();
  j["id"] = ad.id;
  j["job_name"] = ad.job_name;
  j["company_name"] = ad.company_name;
  j["advertisement_date"] = ad.advertisement_date ? json(format_date(*ad.advertisement_date)) : json(nullptr);
  j["apply_count"] = optional_int(ad.apply_count);
  j["view_count"] = optional_int(ad.view_count);
  j["role_category"] = ad.role_category;
  j["education"] = ad.education;
  j["industry"] = ad.industry;
  j["min_experience"] = optional_int(ad.min_experience);
  j["max_experience"] = optional_int(ad.max_experience);
  j["employment_type"] = ad.employment_type;
  j["functional_area"] = ad.functional_area;
  j["locations"] = ad.locations;
  j["key_skills"] = ad.key_skills;
  j["vacancy"] = optional_int(ad.vacancy);
  j["salary"] = ad.salary;
  j["description"] = ad.description;
  return j;
}

namespace {

class CorpusBuilder {
 public:
  explicit CorpusBuilder(std::string source_tag) { result_.corpus.source_tag = std::move(source_tag); }

  void add(std::size_t record_no, const json& record) {
    ++records_;
    try {
      JobAd ad = job_ad_from_json(record);
      if (!ids_.insert(ad.id).second) throw SchemaError("duplicate id " + ad.id);
      result_.corpus.ads.push_back(std::move(ad));
    } catch (const SchemaError& e) {
      reject(record_no, e.what());
    }
  }

  void reject(std::size_t record_no, std::string message) {
    ++result_.skipped;
    result_.diagnostics.push_back({record_no, std::move(message)});
  }

  void count_record() { ++records_; }

  ParseResult finish() {
    if (records_ > 0 && result_.skipped * 2 > records_) {
      throw SchemaError("schema error: " + std::to_string(result_.skipped) + " of " + std::to_string(records_) +
                        " records malformed; wrong input file?");
    }
    return std::move(result_);
  }

 private:
  ParseResult result_;
  std::unordered_set<std::string> ids_;
  std::size_t records_ = 0;
};

void parse_jsonlines(std::istream& input, CorpusBuilder& builder) {
  std::string line;
  std::size_t record_no = 0;
  while (std::getline(input, line)) {
    if (trim(line).empty()) continue;
    ++record_no;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      builder.count_record();
      builder.reject(record_no, std::string("invalid JSON: ") + e.what());
      continue;
    }
    builder.add(record_no, record);
  }
}

void parse_csv(std::string_view text, CorpusBuilder& builder) {
  auto rows = csv::parse(text);
  if (rows.empty()) return;
  std::vector<std::string> header;
  for (const auto& h : rows.front()) header.push_back(normalize_text(h));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      builder.count_record();
      builder.reject(r, "column count " + std::to_string(row.size()) + " does not match header");
      continue;
    }
    json record = json::object();
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& key = header[c];
      auto value = trim(row[c]);
      if (value.empty()) continue;
      record[key] = std::string(value);
    }
    builder.add(r, record);
  }
}

}  // namespace

ParseResult parse_corpus(std::istream& input, Format format, std::string source_tag) {
  if (!input) throw IoError("corpus stream is not readable");
  CorpusBuilder builder(std::move(source_tag));
  if (format == Format::jsonlines) {
    parse_jsonlines(input, builder);
  } else {
    std::ostringstream ss;
    ss << input.rdbuf();
    parse_csv(ss.str(), builder);
  }
  if (input.bad()) throw IoError("read failure while parsing corpus");
  return builder.finish();
}

ParseResult parse_corpus_text(std::string_view text, Format format, std::string source_tag) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in, format, std::move(source_tag));
}

std::string serialize_jsonlines(const Corpus& corpus) {
  std::string out;
  for (const auto& ad : corpus.ads) {
    out += to_json(ad).dump();
    out.push_back('\n');
  }
  return out;
}

std::string serialize_csv(const Corpus& corpus) {
  std::vector<std::string> header(std::begin(kCsvColumns), std::end(kCsvColumns));
  std::string out = csv::join_row(header);
  for (const auto& ad : corpus.ads) {
    json j = to_json(ad);
    std::vector<std::string> fields;
    for (auto column : kCsvColumns) {
      const json& v = j[std::string(column)];
      if (v.is_null()) {
        fields.emplace_back();
      } else if (v.is_array()) {
        std::string joined;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) joined.push_back('|');
          joined += v[i].get<std::string>();
        }
        fields.push_back(std::move(joined));
      } else if (v.is_string()) {
        fields.push_back(v.get<std::string>());
      } else {
        fields.push_back(v.dump());
      }
    }
    out += csv::join_row(fields);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

namespace {

std::vector<std::pair<std::string, double>> weight_map(const json& j, std::string_view key) {
  std::vector<std::pair<std::string, double>> out;
  if (!j.contains(key)) return out;
  for (const auto& [k, v] : j.at(std::string(key)).items()) out.emplace_back(k, v.get<double>());
  return out;
}

}  // namespace

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec spec;
  spec.ads = j.value("ads", std::size_t{0});
  spec.skill_marginals = weight_map(j, "skills");
  for (auto& [name, p] : spec.skill_marginals) name = normalize_skill(name);
  if (j.contains("pairs")) {
    for (const auto& p : j.at("pairs")) {
      spec.pairs.push_back({normalize_skill(p.at("first").get<std::string>()),
                            normalize_skill(p.at("second").get<std::string>()), p.at("joint").get<double>()});
    }
  }
  if (j.contains("title_groups")) {
    for (const auto& g : j.at("title_groups")) {
      TitleGroup group;
      for (const auto& [title, count] : g.items()) group.titles.emplace_back(title, count.get<std::size_t>());
      spec.title_groups.push_back(std::move(group));
    }
  }
  spec.city_weights = weight_map(j, "cities");
  spec.second_location_rate = j.value("second_location_rate", 0.0);
  spec.industry_weights = weight_map(j, "industries");
  spec.role_weights = weight_map(j, "roles");
  if (j.contains("min_experience_choices")) {
    spec.min_experience_choices = j.at("min_experience_choices").get<std::vector<std::int64_t>>();
  }
  spec.max_experience_spread = j.value("max_experience_spread", std::int64_t{0});
  for (const auto& [k, w] : weight_map(j, "vacancy")) {
    auto v = parse_int(k);
    if (!v) throw SchemaError("synth spec: vacancy key '" + k + "' is not an integer");
    spec.vacancy_weights.emplace_back(*v, w);
  }
  spec.max_apply_count = j.value("max_apply_count", std::int64_t{0});
  spec.fallback_skill = normalize_skill(j.value("fallback_skill", std::string("communication")));
  return spec;
}

namespace {

void validate_spec(const SynthSpec& spec) {
  std::map<std::string, double> marginal;
  for (const auto& [name, p] : spec.skill_marginals) {
    if (!(p >= 0.0 && p <= 1.0)) throw SchemaError("infeasible spec: marginal of '" + name + "' outside [0, 1]");
    if (!marginal.emplace(name, p).second) throw SchemaError("infeasible spec: skill '" + name + "' listed twice");
  }
  std::set<std::string> paired;
  for (const auto& pair : spec.pairs) {
    for (const auto* s : {&pair.first, &pair.second}) {
      if (!marginal.count(*s)) throw SchemaError("infeasible spec: paired skill '" + *s + "' has no marginal");
      if (!paired.insert(*s).second) {
        throw SchemaError("infeasible spec: skill '" + *s + "' appears in more than one planted pair");
      }
    }
    double pa = marginal[pair.first], pb = marginal[pair.second];
    if (pair.joint > std::min(pa, pb)) {
      throw SchemaError("infeasible spec: joint " + format_double(pair.joint) + " of (" + pair.first + ", " +
                        pair.second + ") exceeds a marginal");
    }
    if (pair.joint < 0.0 || pair.joint < pa + pb - 1.0) {
      throw SchemaError("infeasible spec: joint " + format_double(pair.joint) + " of (" + pair.first + ", " +
                        pair.second + ") is below max(0, pa + pb - 1)");
    }
  }
  if (spec.min_experience_choices.empty()) throw SchemaError("infeasible spec: no min_experience choices");
  if (spec.second_location_rate < 0.0 || spec.second_location_rate > 1.0) {
    throw SchemaError("infeasible spec: second_location_rate outside [0, 1]");
  }
}

std::string pick(Rng& rng, const std::vector<std::pair<std::string, double>>& weights) {
  if (weights.empty()) return {};
  std::vector<double> w;
  for (const auto& [name, p] : weights) w.push_back(p);
  return weights[rng.weighted(w)].first;
}

}  // namespace

Corpus synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  validate_spec(spec);

  std::vector<std::string> titles;
  for (const auto& group : spec.title_groups) {
    for (const auto& [title, count] : group.titles) titles.insert(titles.end(), count, title);
  }
  std::size_t n = spec.ads ? spec.ads : titles.size();
  if (n == 0) throw SchemaError("infeasible spec: zero ads requested");
  if (!titles.empty() && titles.size() != n) {
    throw SchemaError("infeasible spec: title counts sum to " + std::to_string(titles.size()) + " but ads = " +
                      std::to_string(n));
  }
  Rng rng(seed);
  if (titles.empty()) titles.assign(n, "software engineer");
  rng.shuffle(std::span<std::string>(titles));

  std::map<std::string, double> marginal(spec.skill_marginals.begin(), spec.skill_marginals.end());
  std::map<std::string, const PlantedPair*> pair_of;
  for (const auto& pair : spec.pairs) pair_of[pair.first] = &pair;
  std::set<std::string> second_of_pair;
  for (const auto& pair : spec.pairs) second_of_pair.insert(pair.second);

  Corpus corpus;
  corpus.source_tag = "synthetic:seed=" + std::to_string(seed);
  corpus.ads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    JobAd ad;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06zu", i + 1);
    ad.id = id;
    ad.job_name = titles[i];
    ad.company_name = "company-" + std::to_string(rng.below(25) + 1);
    ad.advertisement_date = std::chrono::year{2021} / std::chrono::August / std::chrono::day{unsigned(i % 28 + 1)};

    std::set<std::string> planted_on;
    for (const auto& [name, p] : spec.skill_marginals) {
      if (second_of_pair.count(name)) continue;
      if (auto it = pair_of.find(name); it != pair_of.end()) {
        const PlantedPair& pair = *it->second;
        double pa = marginal[pair.first], pb = marginal[pair.second];
        double cells[] = {pair.joint, pa - pair.joint, pb - pair.joint, 1.0 - pa - pb + pair.joint};
        for (double& c : cells) c = std::max(c, 0.0);
        switch (rng.weighted(cells)) {
          case 0:
            planted_on.insert(pair.first);
            planted_on.insert(pair.second);
            break;
          case 1:
            planted_on.insert(pair.first);
            break;
          case 2:
            planted_on.insert(pair.second);
            break;
          default:
            break;
        }
      } else if (rng.bernoulli(p)) {
        planted_on.insert(name);
      }
    }
    // Skill order follows the declaration order of the spec.
    for (const auto& [name, p] : spec.skill_marginals) {
      if (planted_on.count(name)) ad.key_skills.push_back(name);
    }
    if (ad.key_skills.empty()) ad.key_skills.push_back(spec.fallback_skill);

    if (!spec.city_weights.empty()) {
      ad.locations.push_back(pick(rng, spec.city_weights));
      if (spec.city_weights.size() > 1 && rng.bernoulli(spec.second_location_rate)) {
        std::vector<std::pair<std::string, double>> others;
        for (const auto& cw : spec.city_weights) {
          if (cw.first != ad.locations.front()) others.push_back(cw);
        }
        ad.locations.push_back(pick(rng, others));
      }
    }
    ad.industry = pick(rng, spec.industry_weights);
    ad.role_category = pick(rng, spec.role_weights);
    ad.min_experience = spec.min_experience_choices[rng.below(spec.min_experience_choices.size())];
    ad.max_experience = *ad.min_experience + static_cast<std::int64_t>(
                                                 rng.below(static_cast<std::uint64_t>(spec.max_experience_spread) + 1));
    if (spec.vacancy_weights.empty()) {
      ad.vacancy = 1;
    } else {
      std::vector<double> w;
      for (const auto& vw : spec.vacancy_weights) w.push_back(vw.second);
      ad.vacancy = spec.vacancy_weights[rng.weighted(w)].first;
    }
    ad.apply_count = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.max_apply_count) + 1));
    ad.view_count = *ad.apply_count * 4;
    ad.employment_type = "full time, permanent";
    ad.education = {"any graduate"};
    ad.description = "Synthetic advertisement for " + ad.job_name + ".";
    corpus.ads.push_back(std::move(ad));
  }
  return corpus;
}

}  // namespace jobskill::corpus
