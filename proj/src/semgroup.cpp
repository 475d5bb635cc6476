#include "jobskill/semgroup.hpp"

#include <numeric>

#include "jobskill/text.hpp"

namespace jobskill::semgroup {

std::vector<std::string> APConfig::check() const {
  std::vector<std::string> problems;
  if (!(damping >= 0.5 && damping < 1.0)) {
    problems.push_back("semgroup.damping: " + format_double(damping) + " outside [0.5, 1)");
  }
  if (max_iterations < 1) problems.push_back("semgroup.max_iterations: must be positive");
  if (convergence_window < 1) problems.push_back("semgroup.convergence_window: must be positive");
  if (convergence_window >= max_iterations) {
    problems.push_back("semgroup.convergence_window: must be smaller than semgroup.max_iterations");
  }
  if (preference && !std::isfinite(*preference)) problems.push_back("semgroup.preference: not finite");
  return problems;
}

const Cluster& SemanticClustering::cluster_of(const std::string& label) const {
  auto it = assignments.find(label);
  if (it == assignments.end()) throw LogicError("value '" + label + "' is not assigned to any cluster");
  return clusters.at(it->second);
}

SemanticClustering affinity_propagation(const embed::DistanceMatrixd& d, const APConfig& config) {
  if (auto problems = config.check(); !problems.empty()) throw ConfigError(problems.front());
  const auto n = d.size();
  if (static_cast<std::size_t>(n) != d.labels.size() || d.values.cols() != n) {
    throw DataError("distance matrix: label count does not match matrix shape");
  }
  if (d.values.hasNaN()) throw DataError("distance matrix contains NaN");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return d.labels[x] < d.labels[y]; });

  Eigen::MatrixXd similarity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) similarity(i, k) = -d.values(order[i], order[k]);

  APResult raw = affinity_propagation_indices(similarity, config);

  SemanticClustering out;
  out.converged = raw.converged;
  out.iterations = raw.iterations;
  out.preference = raw.preference;
  std::map<std::string, std::vector<std::string>> by_exemplar;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& label = d.labels[order[i]];
    const auto& exemplar = d.labels[order[raw.exemplar_of[i]]];
    by_exemplar[exemplar].push_back(label);
  }
  for (auto& [exemplar, members] : by_exemplar) {
    std::sort(members.begin(), members.end());
    for (const auto& m : members) out.assignments[m] = out.clusters.size();
    out.clusters.push_back({exemplar, std::move(members), std::nullopt});
  }
  return out;
}

std::string elect_leader(const std::vector<std::string>& members, const std::map<std::string, std::size_t>& frequency) {
  if (members.empty()) throw LogicError("elect_leader: empty cluster");
  const std::string* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& m : members) {
    auto it = frequency.find(m);
    std::size_t count = it == frequency.end() ? 0 : it->second;
    if (!best || count > best_count || (count == best_count && m < *best)) {
      best = &m;
      best_count = count;
    }
  }
  return *best;
}

void elect_leaders(SemanticClustering& clustering, const std::vector<std::string>& values) {
  std::map<std::string, std::size_t> frequency;
  for (const auto& v : values) ++frequency[v];
  for (auto& c : clustering.clusters) c.leader = elect_leader(c.members, frequency);
}

std::map<std::string, std::size_t> fold_counts(const std::vector<std::string>& values,
                                               const SemanticClustering& clustering) {
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) {
    const Cluster& c = clustering.cluster_of(v);
    if (!c.leader) throw LogicError("cluster of '" + c.exemplar + "' has no leader");
    ++counts[*c.leader];
  }
  return counts;
}

nlohmann::json to_json(const SemanticClustering& clustering) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : clustering.clusters) {
    clusters.push_back({{"exemplar", c.exemplar},
                        {"leader", c.leader ? nlohmann::json(*c.leader) : nlohmann::json(nullptr)},
                        {"members", c.members}});
  }
  return {{"clusters", clusters},
          {"converged", clustering.converged},
          {"iterations", clustering.iterations},
          {"preference", clustering.preference}};
}

SemanticClustering clustering_from_json(const nlohmann::json& j) {
  SemanticClustering out;
  out.converged = j.at("converged").get<bool>();
  out.iterations = j.at("iterations").get<int>();
  out.preference = j.at("preference").get<double>();
  for (const auto& c : j.at("clusters")) {
    Cluster cluster;
    cluster.exemplar = c.at("exemplar").get<std::string>();
    cluster.members = c.at("members").get<std::vector<std::string>>();
    if (!c.at("leader").is_null()) cluster.leader = c.at("leader").get<std::string>();
    for (const auto& m : cluster.members) out.assignments[m] = out.clusters.size();
    out.clusters.push_back(std::move(cluster));
  }
  return out;
}

std::string assignments_csv(const SemanticClustering& clustering) {
  std::string out = csv::join_row({"value", "leader"});
  for (const auto& [label, index] : clustering.assignments) {
    const auto& c = clustering.clusters[index];
    out += csv::join_row({label, c.leader.value_or(c.exemplar)});
  }
  return out;
}

}  // namespace jobskill::semgroup
