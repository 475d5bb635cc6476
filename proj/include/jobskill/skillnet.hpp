#pragma once

// Skill co-occurrence network: thresholded vocabulary, binary job-skill
// incidence, L2 row normalization, skill-skill cosine similarity and
// resolution-based clustering by local moving.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jobskill/corpus.hpp"
#include "jobskill/random.hpp"

namespace jobskill::skillnet {

struct SkillVocab {
  std::vector<std::string> skills;  // sorted
  std::map<std::string, std::size_t> occurrence;
  std::size_t min_occurrence = 1;

  std::size_t size() const { return skills.size(); }
  // Column index of a skill, or -1 when it is not in the vocabulary.
  std::ptrdiff_t index_of(const std::string& skill) const;
};

// Skills listed by at least `min_occurrence` distinct ads. Throws DataError
// when nothing survives.
SkillVocab filter_skills(const corpus::Corpus& corpus, std::size_t min_occurrence);

using Incidence = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct JobSkillMatrix {
  std::size_t n_jobs = 0;
  SkillVocab vocab;
  Incidence entries;                 // a(i, j) = 1 iff ad i lists skill j
  std::vector<std::size_t> zero_rows;  // ads without any vocabulary skill
};

JobSkillMatrix build_matrix(const corpus::Corpus& corpus, const SkillVocab& vocab);

template <typename Scalar>
struct NormalizedRows {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> matrix;
  std::vector<Eigen::Index> zero_rows;
};

// Divides every row by its L2 norm sqrt(sum_j a_ij^2). Zero rows stay zero
// and are reported.
template <typename Derived>
NormalizedRows<typename Derived::Scalar> normalize_rows(const Eigen::SparseMatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  NormalizedRows<Scalar> out;
  out.matrix = m;
  out.matrix.makeCompressed();
  for (Eigen::Index i = 0; i < out.matrix.outerSize(); ++i) {
    Scalar sq = 0;
    for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(out.matrix, i); it; ++it) {
      sq += it.value() * it.value();
    }
    if (sq == Scalar(0)) {
      out.zero_rows.push_back(i);
      continue;
    }
    const Scalar norm = std::sqrt(sq);
    for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(out.matrix, i); it; ++it) {
      it.valueRef() /= norm;
    }
  }
  return out;
}

NormalizedRows<double> normalize_rows(const JobSkillMatrix& m);

// Cosine similarity between the columns of a non-negative incidence matrix:
// each column profile is L2-normalized (the row kernel above applied to the
// transpose) and the Gram matrix of the normalized profiles is taken. The
// result is exactly symmetric, clamped to [0, 1], with unit diagonal for
// every non-empty column and zero diagonal for empty ones.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cosine_columns(
    const Eigen::SparseMatrixBase<Derived>& incidence, std::vector<Eigen::Index>* empty_columns = nullptr) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> profiles = incidence.derived().transpose();
  auto normalized = normalize_rows(profiles);
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> gram = normalized.matrix * normalized.matrix.transpose();
  const Eigen::Index m = profiles.rows();
  Dense out = Dense::Zero(m, m);
  for (Eigen::Index i = 0; i < gram.outerSize(); ++i) {
    for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(gram, i); it; ++it) {
      if (it.col() > i) {
        Scalar v = std::clamp(it.value(), Scalar(0), Scalar(1));
        out(i, it.col()) = v;
        out(it.col(), i) = v;
      }
    }
  }
  std::vector<char> empty(static_cast<std::size_t>(m), 0);
  for (auto r : normalized.zero_rows) empty[static_cast<std::size_t>(r)] = 1;
  for (Eigen::Index i = 0; i < m; ++i) out(i, i) = empty[static_cast<std::size_t>(i)] ? Scalar(0) : Scalar(1);
  if (empty_columns) *empty_columns = normalized.zero_rows;
  return out;
}

struct SkillSimilarity {
  SkillVocab vocab;
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> empty_skills;  // zero occurrences in the matrix
};

SkillSimilarity cosine_matrix(const JobSkillMatrix& m);

// ---------------------------------------------------------------------------
// Clustering

// Q = sum over same-cluster pairs j < k of (s_jk - resolution). Diagonal ignored.
template <typename Derived>
typename Derived::Scalar partition_quality(const Eigen::MatrixBase<Derived>& s, const std::vector<int>& labels,
                                           typename Derived::Scalar resolution) {
  using Scalar = typename Derived::Scalar;
  Scalar q = 0;
  const Eigen::Index n = s.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k)
      if (labels[j] == labels[k]) q += s(j, k) - resolution;
  return q;
}

// Relabels clusters 0, 1, ... in order of their smallest member.
std::vector<int> canonical_labels(const std::vector<int>& labels);

template <typename Scalar>
struct LocalMovingResult {
  std::vector<int> labels;  // canonical
  Scalar quality = 0;
  std::vector<Scalar> pass_quality;  // Q after every local-moving pass
};

// One seeded run: node-level local moving (random visiting order, a node
// moves only on strict improvement) followed by aggregation of clusters into
// weighted super-nodes, repeated until no level produces a move.
template <typename Derived>
LocalMovingResult<typename Derived::Scalar> local_moving(const Eigen::MatrixBase<Derived>& similarity,
                                                         typename Derived::Scalar resolution, std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = similarity.rows();
  LocalMovingResult<Scalar> result;
  std::vector<int> original(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) original[i] = static_cast<int>(i);
  if (m == 0) return result;

  Dense weights = similarity;
  weights.diagonal().setZero();
  std::vector<Scalar> node_size(static_cast<std::size_t>(m), Scalar(1));
  Rng rng(seed);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon() * 16 * (weights.cwiseAbs().maxCoeff() + resolution + 1);

  for (;;) {
    const Eigen::Index n = weights.rows();
    std::vector<int> cluster(static_cast<std::size_t>(n));
    std::vector<Scalar> cluster_size(node_size);
    for (Eigen::Index v = 0; v < n; ++v) cluster[v] = static_cast<int>(v);

    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index v = 0; v < n; ++v) order[v] = static_cast<int>(v);
    std::vector<Scalar> link(static_cast<std::size_t>(n), Scalar(0));
    std::vector<char> is_touched(static_cast<std::size_t>(n), 0);
    std::vector<int> touched;
    bool level_moved = false;

    for (;;) {
      rng.shuffle(std::span<int>(order));
      bool moved = false;
      for (int v : order) {
        const int home = cluster[v];
        cluster_size[home] -= node_size[v];
        touched.clear();
        for (Eigen::Index u = 0; u < n; ++u) {
          if (u == v || weights(v, u) == Scalar(0)) continue;
          const int c = cluster[u];
          if (!is_touched[c]) {
            is_touched[c] = 1;
            touched.push_back(c);
          }
          link[c] += weights(v, u);
        }
        auto score = [&](int c) { return link[c] - resolution * node_size[v] * cluster_size[c]; };
        const Scalar stay = score(home);
        int alt = -1;
        Scalar alt_score = -std::numeric_limits<Scalar>::infinity();
        for (int c : touched) {
          if (c == home) continue;
          const Scalar sc = score(c);
          if (sc > alt_score || (sc == alt_score && c < alt)) {
            alt = c;
            alt_score = sc;
          }
        }
        // Opening a fresh cluster scores 0; one is always free when the home
        // cluster keeps other members.
        if (cluster_size[home] > Scalar(0) && Scalar(0) > alt_score && Scalar(0) > stay + eps) {
          for (Eigen::Index c = 0; c < n; ++c) {
            if (cluster_size[c] == Scalar(0) && c != home) {
              alt = static_cast<int>(c);
              alt_score = 0;
              break;
            }
          }
        }
        for (int c : touched) {
          link[c] = 0;
          is_touched[c] = 0;
        }
        const int target = (alt >= 0 && alt_score > stay + eps) ? alt : home;
        cluster_size[target] += node_size[v];
        if (target != home) {
          cluster[v] = target;
          moved = true;
          level_moved = true;
        }
      }
      std::vector<int> labels(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) labels[i] = cluster[original[i]];
      result.pass_quality.push_back(partition_quality(similarity, labels, resolution));
      if (!moved) break;
    }

    // Renumber clusters and map original nodes to them.
    std::vector<int> renumber(static_cast<std::size_t>(n), -1);
    int k = 0;
    for (Eigen::Index v = 0; v < n; ++v)
      if (renumber[cluster[v]] < 0) renumber[cluster[v]] = k++;
    for (auto& o : original) o = renumber[cluster[o]];
    if (!level_moved || k == n) break;

    Dense aggregated = Dense::Zero(k, k);
    std::vector<Scalar> aggregated_size(static_cast<std::size_t>(k), Scalar(0));
    for (Eigen::Index v = 0; v < n; ++v) {
      const int cv = renumber[cluster[v]];
      aggregated_size[cv] += node_size[v];
      for (Eigen::Index u = 0; u < n; ++u) {
        const int cu = renumber[cluster[u]];
        if (cu != cv) aggregated(cv, cu) += weights(v, u);
      }
    }
    weights = std::move(aggregated);
    node_size = std::move(aggregated_size);
  }

  result.labels = canonical_labels(original);
  result.quality = partition_quality(similarity, result.labels, resolution);
  return result;
}

struct ClusterOptions {
  std::optional<double> resolution;  // default: mean off-diagonal similarity
  std::uint64_t seed = 42;
  int restarts = 10;
  unsigned threads = 0;
};

struct SkillCluster {
  int id = 0;
  std::vector<std::string> members;
  std::optional<std::string> name;

  std::string display_name() const { return name.value_or("cluster-" + std::to_string(id)); }
};

struct SkillClusterSet {
  std::vector<SkillCluster> clusters;
  double resolution = 0;
  std::uint64_t seed = 0;
  int restarts = 0;
  double quality = 0;
  std::vector<double> pass_quality;  // of the selected restart

  // skill -> cluster index
  std::map<std::string, std::size_t> membership() const;
};

double mean_off_diagonal(const Eigen::MatrixXd& s);

// Best of `restarts` seeded runs (seed + r); ties go to the lexicographically
// smallest canonical label vector.
SkillClusterSet cluster_skills(const SkillSimilarity& s, const ClusterOptions& options);

// Attaches names (cluster id -> name). Returns warnings for unknown ids.
std::vector<std::string> apply_names(SkillClusterSet& clusters, const std::map<int, std::string>& names);
// Names file: CSV rows "id,name"; an optional header row is skipped.
std::map<int, std::string> parse_names(std::string_view csv_text);

std::string similarity_csv(const SkillSimilarity& s);
// Upper-triangle edges with similarity > 0; `above_cutoff` marks edges >= cutoff.
std::string edge_list_csv(const SkillSimilarity& s, double cutoff);
std::string clusters_csv(const SkillClusterSet& clusters);
nlohmann::json to_json(const SkillClusterSet& clusters);
SkillClusterSet cluster_set_from_json(const nlohmann::json& j);

}  // namespace jobskill::skillnet
