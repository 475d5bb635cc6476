#pragma once

// Tokenization, word-embedding lookup and Word Mover's Distance between short
// free-text values such as job titles.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jobskill/transport.hpp"

namespace jobskill::embed {

using StopWords = std::unordered_set<std::string>;

// Casefolds, splits on whitespace and strips leading/trailing punctuation
// while keeping technical tokens intact (c++, c#, .net, node.js).
std::vector<std::string> tokenize(std::string_view text, const StopWords& stopwords);

StopWords load_stopwords(const std::filesystem::path& path);

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Throws DataError on wrong dimension or non-finite entries.
  void add(const std::string& token, const Eigen::Ref<const Eigen::VectorXd>& vec);

  Eigen::Ref<const Eigen::VectorXd> vector(const std::string& token) const;

  // Returns a copy with every vector multiplied by `factor`.
  EmbeddingStore scaled(double factor) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
  std::vector<Eigen::VectorXd> vectors_;
};

enum class EmbeddingFormat { automatic, text, binary };

// word2vec formats: text ("vocab dim" header, then token and dim floats per
// line) or the little-endian float32 binary variant. `keep`, when given,
// restricts loading to those tokens.
EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format = EmbeddingFormat::automatic,
                               const std::unordered_set<std::string>* keep = nullptr);
EmbeddingStore parse_embeddings_text(std::string_view content, const std::unordered_set<std::string>* keep = nullptr);
EmbeddingStore parse_embeddings_binary(std::string_view content, const std::unordered_set<std::string>* keep = nullptr);
std::string serialize_embeddings_text(const EmbeddingStore& store);
std::string serialize_embeddings_binary(const EmbeddingStore& store);

// Normalized bag of words. Tokens are unique and sorted; weights sum to 1.
// An empty token list is the EmptyDoc value (every input token was OOV).
struct WeightedDoc {
  std::vector<std::string> tokens;
  std::vector<double> weights;

  bool empty() const { return tokens.empty(); }
  bool operator==(const WeightedDoc&) const = default;
};

struct WeightedDocResult {
  WeightedDoc doc;
  std::vector<std::string> oov;
};

WeightedDocResult to_weighted_doc(const std::vector<std::string>& tokens, const EmbeddingStore& store);

// Exact WMD with Euclidean ground cost. Arguments are put in canonical order
// before solving, so wmd(a, b) and wmd(b, a) are bitwise equal. Throws
// std::invalid_argument for an EmptyDoc argument.
double wmd(const WeightedDoc& a, const WeightedDoc& b, const EmbeddingStore& store);

// Ground-cost matrix between the tokens of two documents.
Eigen::MatrixXd ground_cost(const WeightedDoc& a, const WeightedDoc& b, const EmbeddingStore& store);

template <typename Scalar>
struct DistanceMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<std::string> labels;
  Matrix values;
  // Cells filled with the incomparable-value sentinel.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;
  std::optional<Scalar> sentinel;

  Eigen::Index size() const { return values.rows(); }
};

using DistanceMatrixd = DistanceMatrix<double>;

struct PairwiseOptions {
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct PairwiseResult {
  DistanceMatrixd matrix;
  // value -> tokens dropped as out-of-vocabulary
  std::vector<std::pair<std::string, std::vector<std::string>>> oov;
  std::vector<std::string> empty_docs;
};

// Distances over the unique values (sorted). Values whose every token is OOV
// fall back to string equality: 0 against an equal string, otherwise the
// sentinel 1 + max finite entry.
PairwiseResult pairwise_distances(const std::vector<std::string>& values, const EmbeddingStore& store,
                                  const StopWords& stopwords, const PairwiseOptions& options = {});

// Labeled CSV: header row of labels, then one labeled row per value.
std::string distance_matrix_csv(const DistanceMatrixd& d);

}  // namespace jobskill::embed
