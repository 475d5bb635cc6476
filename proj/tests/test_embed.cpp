#include <cmath>
#include <random>

#include "doctest.h"
#include "jobskill/embed.hpp"
#include "jobskill/error.hpp"
#include "jobskill/text.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace jobskill;
using namespace jobskill::embed;

namespace {

EmbeddingStore toy_store(int words, int dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal;
  EmbeddingStore store(dim);
  for (int w = 0; w < words; ++w) {
    Eigen::VectorXd v(dim);
    for (int d = 0; d < dim; ++d) v(d) = normal(gen);
    store.add("w" + std::to_string(w), v);
  }
  return store;
}

double oracle_wmd(const WeightedDoc& a, const WeightedDoc& b, const EmbeddingStore& store) {
  Eigen::MatrixXd cost(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < a.tokens.size(); ++i)
    for (std::size_t j = 0; j < b.tokens.size(); ++j)
      cost(i, j) = (store.vector(a.tokens[i]) - store.vector(b.tokens[j])).norm();
  return oracle::lp_transport(a.weights, b.weights, cost);
}

}  // namespace

TEST_CASE("tokenize casefolds only when there are no stop words") {
  CHECK(tokenize("Senior PHP Developer", {}) == std::vector<std::string>{"senior", "php", "developer"});
}

TEST_CASE("tokenize drops stop words") {
  CHECK(tokenize("Engineer and Developer", {"and"}) == std::vector<std::string>{"engineer", "developer"});
}

TEST_CASE("tokenize keeps technical tokens") {
  CHECK(tokenize("C++ / .NET developer", {}) == std::vector<std::string>{"c++", ".net", "developer"});
  CHECK(tokenize("Node.js, C# (Senior)", {}) == std::vector<std::string>{"node.js", "c#", "senior"});
}

TEST_CASE("weighted doc normalizes counts") {
  EmbeddingStore store(2);
  store.add("php", Eigen::Vector2d(1, 0));
  store.add("developer", Eigen::Vector2d(0, 1));
  auto r = to_weighted_doc({"php", "php", "developer"}, store);
  CHECK(r.doc.tokens == std::vector<std::string>{"developer", "php"});
  CHECK(r.doc.weights[0] == doctest::Approx(1.0 / 3));
  CHECK(r.doc.weights[1] == doctest::Approx(2.0 / 3));
  CHECK(r.oov.empty());
}

TEST_CASE("weighted doc drops out-of-vocabulary tokens") {
  EmbeddingStore store(2);
  store.add("php", Eigen::Vector2d(1, 0));
  auto r = to_weighted_doc({"php", "zzzqx"}, store);
  CHECK(r.doc.tokens == std::vector<std::string>{"php"});
  CHECK(r.doc.weights == std::vector<double>{1.0});
  CHECK(r.oov == std::vector<std::string>{"zzzqx"});
  CHECK(to_weighted_doc({}, store).doc.empty());
}

TEST_CASE("wmd of single-token docs is the euclidean distance") {
  EmbeddingStore store(3);
  store.add("x", Eigen::Vector3d(1, 2, 3));
  store.add("y", Eigen::Vector3d(-1, 0, 5));
  WeightedDoc a{{"x"}, {1.0}}, b{{"y"}, {1.0}};
  CHECK(wmd(a, b, store) == (store.vector("x") - store.vector("y")).norm());
  CHECK(wmd(a, a, store) == 0.0);
}

TEST_CASE("wmd rejects empty documents") {
  EmbeddingStore store(1);
  store.add("x", Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(wmd(WeightedDoc{}, WeightedDoc{{"x"}, {1.0}}, store), std::invalid_argument);
}

TEST_CASE("wmd of two four-token docs matches the linear program") {
  auto store = toy_store(5, 5, 17);
  auto a = to_weighted_doc({"w0", "w1", "w2", "w2"}, store).doc;
  auto b = to_weighted_doc({"w1", "w3", "w4", "w4"}, store).doc;
  CHECK(std::abs(wmd(a, b, store) - oracle_wmd(a, b, store)) <= 1e-9);
  CHECK(wmd(a, b, store) == wmd(b, a, store));
}

TEST_CASE("lp oracle agrees with a hand solved transport") {
  // supplies (0.5, 0.5), demands (0.25, 0.75), costs chosen so the optimum is
  // x11 = 0.25, x12 = 0.25, x22 = 0.5 -> 0.25*1 + 0.25*2 + 0.5*1 = 1.25
  Eigen::MatrixXd cost(2, 2);
  cost << 1, 2, 5, 1;
  CHECK(oracle::lp_transport({0.5, 0.5}, {0.25, 0.75}, cost) == doctest::Approx(1.25));
}

TEST_CASE("pairwise distances over a single value") {
  EmbeddingStore store(2);
  store.add("php", Eigen::Vector2d(1, 0));
  auto r = pairwise_distances({"php"}, store, {});
  REQUIRE(r.matrix.size() == 1);
  CHECK(r.matrix.values(0, 0) == 0.0);
}

TEST_CASE("pairwise distances ignore word order") {
  EmbeddingStore store(2);
  store.add("php", Eigen::Vector2d(1, 0));
  store.add("developer", Eigen::Vector2d(0, 1));
  auto r = pairwise_distances({"php developer", "developer php"}, store, {});
  CHECK(r.matrix.values(0, 1) == 0.0);
  CHECK(r.matrix.values(1, 0) == 0.0);
}

TEST_CASE("pairwise distances match the oracle element by element") {
  auto store = toy_store(8, 5, 3);
  std::vector<std::string> titles{"w0 w1", "w1 w2 w3", "w4", "w5 w5 w6", "w7 w0 w2", "w3 w6"};
  auto r = pairwise_distances(titles, store, {}, {.threads = 3});
  REQUIRE(r.matrix.size() == 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      auto a = to_weighted_doc(split(r.matrix.labels[i], ' '), store).doc;
      auto b = to_weighted_doc(split(r.matrix.labels[j], ' '), store).doc;
      CHECK(std::abs(r.matrix.values(i, j) - oracle_wmd(a, b, store)) <= 1e-9);
    }
  }
}

TEST_CASE("all out-of-vocabulary values fall back to string equality") {
  EmbeddingStore store(1);
  store.add("a", Eigen::VectorXd::Constant(1, 0.0));
  store.add("b", Eigen::VectorXd::Constant(1, 3.0));
  auto r = pairwise_distances({"a", "b", "qqq", "zzz"}, store, {});
  const auto& d = r.matrix;
  REQUIRE(d.size() == 4);
  REQUIRE(d.sentinel);
  CHECK(*d.sentinel == 4.0);
  CHECK(d.values(2, 2) == 0.0);
  CHECK(d.values(2, 3) == 4.0);
  CHECK(d.values(0, 2) == 4.0);
  CHECK(d.flagged(0, 2));
  CHECK_FALSE(d.flagged(0, 1));
  CHECK(r.empty_docs == std::vector<std::string>{"qqq", "zzz"});
}

TEST_CASE("embedding files round trip in text and binary form") {
  auto store = toy_store(6, 4, 9);
  auto text = serialize_embeddings_text(store);
  auto from_text = parse_embeddings_text(text);
  auto from_binary = parse_embeddings_binary(serialize_embeddings_binary(store));
  REQUIRE(from_text.size() == 6);
  REQUIRE(from_binary.size() == 6);
  for (const auto& t : store.tokens()) {
    CHECK((from_text.vector(t) - store.vector(t)).norm() < 1e-5);
    CHECK((from_binary.vector(t) - store.vector(t)).norm() < 1e-6);
  }
  std::unordered_set<std::string> keep{"w1", "w4"};
  CHECK(parse_embeddings_text(text, &keep).size() == 2);
}

TEST_CASE("malformed embedding files are rejected") {
  CHECK_THROWS_AS(parse_embeddings_text("2 3\na 1 2 3\nb 1 2\n"), SchemaError);
  CHECK_THROWS_AS(parse_embeddings_text("1 2\na 1 nan\n"), DataError);
}

TEST_CASE("bundled toy embeddings load") {
  auto store = load_embeddings(fixture::data_dir() / "embeddings.txt");
  CHECK(store.dim() == 12);
  CHECK(store.contains("scientist"));
}
