#include "jobskill/skillnet.hpp"

#include <set>
#include <thread>

#include "jobskill/error.hpp"
#include "jobskill/text.hpp"

namespace jobskill::skillnet {

std::ptrdiff_t SkillVocab::index_of(const std::string& skill) const {
  auto it = std::lower_bound(skills.begin(), skills.end(), skill);
  if (it == skills.end() || *it != skill) return -1;
  return it - skills.begin();
}

SkillVocab filter_skills(const corpus::Corpus& corpus, std::size_t min_occurrence) {
  if (min_occurrence < 1) throw ConfigError("skillnet.min_occurrence: must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& ad : corpus.ads) {
    std::set<std::string> distinct(ad.key_skills.begin(), ad.key_skills.end());
    for (const auto& s : distinct) ++counts[s];
  }
  SkillVocab vocab;
  vocab.min_occurrence = min_occurrence;
  for (const auto& [skill, count] : counts) {
    if (count >= min_occurrence) {
      vocab.skills.push_back(skill);
      vocab.occurrence[skill] = count;
    }
  }
  if (vocab.skills.empty()) {
    throw DataError("no skill appears in " + std::to_string(min_occurrence) +
                    " or more ads; lower skillnet.min_occurrence");
  }
  return vocab;
}

JobSkillMatrix build_matrix(const corpus::Corpus& corpus, const SkillVocab& vocab) {
  JobSkillMatrix out;
  out.n_jobs = corpus.size();
  out.vocab = vocab;
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < corpus.ads.size(); ++i) {
    std::set<std::ptrdiff_t> columns;
    for (const auto& skill : corpus.ads[i].key_skills) {
      if (auto j = vocab.index_of(skill); j >= 0) columns.insert(j);
    }
    if (columns.empty()) out.zero_rows.push_back(i);
    for (auto j : columns) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
  }
  out.entries.resize(static_cast<Eigen::Index>(out.n_jobs), static_cast<Eigen::Index>(vocab.size()));
  out.entries.setFromTriplets(triplets.begin(), triplets.end());
  out.entries.makeCompressed();
  return out;
}

NormalizedRows<double> normalize_rows(const JobSkillMatrix& m) { return normalize_rows(m.entries); }

SkillSimilarity cosine_matrix(const JobSkillMatrix& m) {
  SkillSimilarity out;
  out.vocab = m.vocab;
  std::vector<Eigen::Index> empty;
  out.matrix = cosine_columns(m.entries, &empty);
  for (auto e : empty) out.empty_skills.push_back(static_cast<std::size_t>(e));
  return out;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> relabel;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = relabel.emplace(labels[i], static_cast<int>(relabel.size()));
    out[i] = it->second;
  }
  return out;
}

std::map<std::string, std::size_t> SkillClusterSet::membership() const {
  std::map<std::string, std::size_t> out;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const auto& s : clusters[c].members) out[s] = c;
  return out;
}

double mean_off_diagonal(const Eigen::MatrixXd& s) {
  const auto n = s.rows();
  if (n < 2) return 0.0;
  double total = s.sum() - s.diagonal().sum();
  return total / static_cast<double>(n * (n - 1));
}

SkillClusterSet cluster_skills(const SkillSimilarity& s, const ClusterOptions& options) {
  if (options.restarts < 1) throw ConfigError("skillnet.restarts: must be positive");
  if (options.resolution && !(*options.resolution > 0.0)) {
    throw ConfigError("skillnet.resolution: must be positive");
  }
  const auto m = s.matrix.rows();
  Eigen::MatrixXd weights = s.matrix;
  // Skills absent from every ad stay singletons.
  for (auto e : s.empty_skills) {
    weights.row(static_cast<Eigen::Index>(e)).setZero();
    weights.col(static_cast<Eigen::Index>(e)).setZero();
  }
  const double resolution = options.resolution.value_or(mean_off_diagonal(weights));

  std::vector<LocalMovingResult<double>> runs(static_cast<std::size_t>(options.restarts));
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(options.restarts));
  auto work = [&](unsigned t) {
    for (int r = static_cast<int>(t); r < options.restarts; r += static_cast<int>(threads)) {
      runs[static_cast<std::size_t>(r)] = local_moving(weights, resolution, options.seed + static_cast<std::uint64_t>(r));
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].quality > runs[best].quality ||
        (runs[r].quality == runs[best].quality && runs[r].labels < runs[best].labels)) {
      best = r;
    }
  }

  SkillClusterSet out;
  out.resolution = resolution;
  out.seed = options.seed;
  out.restarts = options.restarts;
  out.quality = runs[best].quality;
  out.pass_quality = runs[best].pass_quality;
  int k = 0;
  for (int label : runs[best].labels) k = std::max(k, label + 1);
  out.clusters.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) out.clusters[c].id = c;
  for (Eigen::Index j = 0; j < m; ++j) {
    out.clusters[runs[best].labels[j]].members.push_back(s.vocab.skills[static_cast<std::size_t>(j)]);
  }
  return out;
}

std::vector<std::string> apply_names(SkillClusterSet& clusters, const std::map<int, std::string>& names) {
  std::vector<std::string> warnings;
  for (const auto& [id, name] : names) {
    auto it = std::find_if(clusters.clusters.begin(), clusters.clusters.end(), [&](const auto& c) { return c.id == id; });
    if (it == clusters.clusters.end()) {
      warnings.push_back("names file: no cluster with id " + std::to_string(id) + "; name '" + name + "' ignored");
      continue;
    }
    it->name = name;
  }
  return warnings;
}

std::map<int, std::string> parse_names(std::string_view csv_text) {
  std::map<int, std::string> names;
  auto rows = csv::parse(csv_text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 2) throw SchemaError("names file row " + std::to_string(r + 1) + ": expected 'id,name'");
    auto id_text = std::string(trim(row[0]));
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument(id_text);
    } catch (const std::exception&) {
      if (r == 0) continue;  // header
      throw SchemaError("names file row " + std::to_string(r + 1) + ": bad cluster id '" + id_text + "'");
    }
    names[id] = std::string(trim(row[1]));
  }
  return names;
}

std::string similarity_csv(const SkillSimilarity& s) {
  std::vector<std::string> header{""};
  header.insert(header.end(), s.vocab.skills.begin(), s.vocab.skills.end());
  std::string out = csv::join_row(header);
  for (Eigen::Index i = 0; i < s.matrix.rows(); ++i) {
    std::vector<std::string> row{s.vocab.skills[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < s.matrix.cols(); ++j) row.push_back(format_double(s.matrix(i, j)));
    out += csv::join_row(row);
  }
  return out;
}

std::string edge_list_csv(const SkillSimilarity& s, double cutoff) {
  std::string out = csv::join_row({"skill_a", "skill_b", "similarity", "above_cutoff"});
  for (Eigen::Index i = 0; i < s.matrix.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < s.matrix.cols(); ++j) {
      double v = s.matrix(i, j);
      if (v <= 0.0) continue;
      out += csv::join_row({s.vocab.skills[static_cast<std::size_t>(i)], s.vocab.skills[static_cast<std::size_t>(j)],
                            format_double(v), v >= cutoff ? "1" : "0"});
    }
  }
  return out;
}

std::string clusters_csv(const SkillClusterSet& clusters) {
  std::string out = csv::join_row({"skill", "cluster_id", "cluster_name"});
  for (const auto& c : clusters.clusters)
    for (const auto& s : c.members) out += csv::join_row({s, std::to_string(c.id), c.display_name()});
  return out;
}

nlohmann::json to_json(const SkillClusterSet& clusters) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : clusters.clusters) {
    list.push_back({{"id", c.id},
                    {"members", c.members},
                    {"name", c.display_name()},
                    {"named", c.name.has_value()}});
  }
  return {{"clusters", list},
          {"pass_quality", clusters.pass_quality},
          {"quality", clusters.quality},
          {"resolution", clusters.resolution},
          {"restarts", clusters.restarts},
          {"seed", clusters.seed}};
}

SkillClusterSet cluster_set_from_json(const nlohmann::json& j) {
  SkillClusterSet out;
  out.resolution = j.at("resolution").get<double>();
  out.seed = j.at("seed").get<std::uint64_t>();
  out.restarts = j.at("restarts").get<int>();
  out.quality = j.at("quality").get<double>();
  out.pass_quality = j.at("pass_quality").get<std::vector<double>>();
  for (const auto& c : j.at("clusters")) {
    SkillCluster cluster;
    cluster.id = c.at("id").get<int>();
    cluster.members = c.at("members").get<std::vector<std::string>>();
    if (c.at("named").get<bool>()) cluster.name = c.at("name").get<std::string>();
    out.clusters.push_back(std::move(cluster));
  }
  return out;
}

}  // namespace jobskill::skillnet
