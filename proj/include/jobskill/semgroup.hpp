#pragma once

// Semantic grouping of free-text values: affinity propagation over a distance
// matrix, leader election per cluster and folding of occurrence counts onto
// leaders.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jobskill/embed.hpp"
#include "jobskill/error.hpp"

namespace jobskill::semgroup {

struct APConfig {
  double damping = 0.5;
  int max_iterations = 200;
  int convergence_window = 15;
  // Empty means "median of the off-diagonal similarities".
  std::optional<double> preference;

  // Empty when valid, otherwise one message per violated constraint.
  std::vector<std::string> check() const;
};

struct Cluster {
  std::string exemplar;
  std::vector<std::string> members;  // sorted
  std::optional<std::string> leader;
};

struct SemanticClustering {
  std::vector<Cluster> clusters;  // ordered by exemplar label
  std::map<std::string, std::size_t> assignments;
  bool converged = true;
  int iterations = 0;
  double preference = 0.0;

  const Cluster& cluster_of(const std::string& label) const;
};

// Raw message-passing result on index space.
struct APResult {
  std::vector<Eigen::Index> exemplar_of;  // exemplar index for every point
  bool converged = false;
  int iterations = 0;
  double preference = 0.0;
};

namespace detail {

template <typename Scalar>
Scalar median(std::vector<Scalar> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / Scalar(2);
}

}  // namespace detail

// Affinity propagation on a similarity matrix (diagonal ignored; preferences
// come from the config). Points are assumed to be indexed in tie-break order:
// among otherwise symmetric candidates the lower index wins. That is enforced
// by a vanishing index-proportional offset on the preferences rather than by
// random noise, so runs are reproducible.
template <typename Derived>
APResult affinity_propagation_indices(const Eigen::MatrixBase<Derived>& similarity, const APConfig& config) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = similarity.rows();
  APResult result;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  if (!similarity.allFinite()) throw DataError("affinity propagation: non-finite similarity");
  if (n == 1) {
    result.exemplar_of = {0};
    result.converged = true;
    return result;
  }

  std::vector<Scalar> off_diagonal;
  off_diagonal.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i != k) off_diagonal.push_back(similarity(i, k));
  const Scalar pref = config.preference ? Scalar(*config.preference) : detail::median(off_diagonal);
  result.preference = static_cast<double>(pref);

  // Degenerate input: every point equally similar to every other point.
  auto [lo, hi] = std::minmax_element(off_diagonal.begin(), off_diagonal.end());
  if (*lo == *hi) {
    result.exemplar_of.assign(static_cast<std::size_t>(n), 0);
    result.converged = true;
    return result;
  }

  Matrix s = similarity;
  const Scalar spread = *hi - *lo;
  const Scalar tie_step = spread * Scalar(1e-6) / Scalar(n);
  for (Eigen::Index k = 0; k < n; ++k) s(k, k) = pref - tie_step * Scalar(k);

  Matrix r = Matrix::Zero(n, n);
  Matrix a = Matrix::Zero(n, n);
  const Scalar lambda = Scalar(config.damping);
  std::vector<char> exemplar(static_cast<std::size_t>(n), 0), previous(static_cast<std::size_t>(n), 0);
  int stable = 0;

  int it = 0;
  for (; it < config.max_iterations; ++it) {
    // Responsibilities.
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      Scalar second = best;
      Eigen::Index best_k = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        Scalar v = a(i, k) + s(i, k);
        if (v > best) {
          second = best;
          best = v;
          best_k = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        Scalar fresh = s(i, k) - (k == best_k ? second : best);
        r(i, k) = lambda * r(i, k) + (Scalar(1) - lambda) * fresh;
      }
    }
    // Availabilities.
    for (Eigen::Index k = 0; k < n; ++k) {
      Scalar positive_sum = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) positive_sum += std::max(r(i, k), Scalar(0));
      for (Eigen::Index i = 0; i < n; ++i) {
        Scalar fresh;
        if (i == k) {
          fresh = positive_sum;
        } else {
          fresh = std::min(Scalar(0), r(k, k) + positive_sum - std::max(r(i, k), Scalar(0)));
        }
        a(i, k) = lambda * a(i, k) + (Scalar(1) - lambda) * fresh;
      }
    }
    if (!r.allFinite() || !a.allFinite()) throw DataError("affinity propagation: messages became non-finite");

    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      exemplar[k] = (a(k, k) + r(k, k)) > 0;
      any = any || exemplar[k];
    }
    stable = (exemplar == previous) ? stable + 1 : 0;
    previous = exemplar;
    if (any && stable >= config.convergence_window) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.iterations = it;

  std::vector<Eigen::Index> exemplars;
  for (Eigen::Index k = 0; k < n; ++k)
    if (exemplar[k]) exemplars.push_back(k);
  if (exemplars.empty()) {
    // No point claims itself; fall back to the strongest self-evidence.
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n; ++k)
      if (a(k, k) + r(k, k) > a(best, best) + r(best, best)) best = k;
    exemplars.push_back(best);
  }

  result.exemplar_of.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::binary_search(exemplars.begin(), exemplars.end(), i)) {
      result.exemplar_of[i] = i;
      continue;
    }
    Eigen::Index best = exemplars.front();
    for (Eigen::Index k : exemplars)
      if (a(i, k) + r(i, k) > a(i, best) + r(i, best)) best = k;
    result.exemplar_of[i] = best;
  }
  return result;
}

// Similarity is the negated distance. Labels are processed in lexicographic
// order so ties resolve toward the smallest label. Throws DataError on NaN.
SemanticClustering affinity_propagation(const embed::DistanceMatrixd& d, const APConfig& config);

// Member with the most appearances; ties go to the lexicographically
// smallest label. Throws LogicError for an empty cluster.
std::string elect_leader(const std::vector<std::string>& members, const std::map<std::string, std::size_t>& frequency);

// Elects a leader for every cluster from the occurrences in `values`.
void elect_leaders(SemanticClustering& clustering, const std::vector<std::string>& values);

// Leader -> number of values falling in that leader's cluster. Throws
// LogicError for a value without a cluster or a cluster without a leader.
std::map<std::string, std::size_t> fold_counts(const std::vector<std::string>& values,
                                               const SemanticClustering& clustering);

nlohmann::json to_json(const SemanticClustering& clustering);
SemanticClustering clustering_from_json(const nlohmann::json& j);
// Two columns: value, leader.
std::string assignments_csv(const SemanticClustering& clustering);

}  // namespace jobskill::semgroup
