#include "jobskill/embed.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "jobskill/error.hpp"
#include "jobskill/text.hpp"

namespace jobskill::embed {

namespace {

bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool is_alnum(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 128 || std::isalnum(u);
}

std::string_view strip_token(std::string_view t) {
  // Leading '.' survives only when it introduces a word (".net").
  while (!t.empty() && is_punct(t.front()) && !(t.front() == '.' && t.size() > 1 && is_alnum(t[1]))) {
    t.remove_prefix(1);
  }
  // Trailing '+' and '#' belong to language names (c++, c#, f#).
  while (!t.empty() && is_punct(t.back()) && t.back() != '+' && t.back() != '#') t.remove_suffix(1);
  return t;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const StopWords& stopwords) {
  std::vector<std::string> tokens;
  std::string folded = to_lower_ascii(text);
  std::istringstream in(folded);
  std::string raw;
  while (in >> raw) {
    auto t = strip_token(raw);
    if (t.empty()) continue;
    std::string token(t);
    if (stopwords.count(token)) continue;
    tokens.push_back(std::move(token));
  }
  return tokens;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  StopWords words;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto w = normalize_text(line);
    if (!w.empty() && w.front() != '#') words.insert(std::move(w));
  }
  return words;
}

void EmbeddingStore::add(const std::string& token, const Eigen::Ref<const Eigen::VectorXd>& vec) {
  if (dim_ <= 0) throw DataError("embedding store has no dimension");
  if (vec.size() != dim_) {
    throw DataError("embedding for '" + token + "' has " + std::to_string(vec.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  if (!vec.allFinite()) throw DataError("embedding for '" + token + "' has non-finite entries");
  if (auto it = index_.find(token); it != index_.end()) {
    vectors_[it->second] = vec;
    return;
  }
  index_.emplace(token, vectors_.size());
  tokens_.push_back(token);
  vectors_.emplace_back(vec);
}

Eigen::Ref<const Eigen::VectorXd> EmbeddingStore::vector(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::out_of_range("token not in embedding store: " + token);
  return vectors_[it->second];
}

EmbeddingStore EmbeddingStore::scaled(double factor) const {
  EmbeddingStore out(dim_);
  for (std::size_t i = 0; i < tokens_.size(); ++i) out.add(tokens_[i], vectors_[i] * factor);
  return out;
}

namespace {

std::pair<long long, int> parse_header(std::string_view line) {
  std::istringstream in{std::string(line)};
  long long vocab = -1;
  int dim = -1;
  if (!(in >> vocab >> dim) || vocab < 0 || dim <= 0) {
    throw SchemaError("embedding file: header must be '<vocab_size> <dim>'");
  }
  return {vocab, dim};
}

}  // namespace

EmbeddingStore parse_embeddings_text(std::string_view content, const std::unordered_set<std::string>* keep) {
  auto eol = content.find('\n');
  auto [vocab, dim] = parse_header(content.substr(0, eol));
  EmbeddingStore store(dim);
  std::istringstream in{std::string(eol == std::string_view::npos ? std::string_view{} : content.substr(eol + 1))};
  std::string line;
  long long line_no = 1;
  Eigen::VectorXd vec(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    if (keep && !keep->count(token)) continue;
    for (int k = 0; k < dim; ++k) {
      std::string num;
      if (!(fields >> num)) {
        throw SchemaError("embedding file line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                          " components");
      }
      double v = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc{} || ptr != num.data() + num.size()) {
        throw SchemaError("embedding file line " + std::to_string(line_no) + ": bad number '" + num + "'");
      }
      vec[k] = v;
    }
    std::string extra;
    if (fields >> extra) {
      throw SchemaError("embedding file line " + std::to_string(line_no) + ": more than " + std::to_string(dim) +
                        " components");
    }
    store.add(token, vec);
  }
  return store;
}

EmbeddingStore parse_embeddings_binary(std::string_view content, const std::unordered_set<std::string>* keep) {
  auto eol = content.find('\n');
  if (eol == std::string_view::npos) throw SchemaError("embedding file: missing header line");
  auto [vocab, dim] = parse_header(content.substr(0, eol));
  EmbeddingStore store(dim);
  std::size_t pos = eol + 1;
  Eigen::VectorXd vec(dim);
  for (long long w = 0; w < vocab; ++w) {
    while (pos < content.size() && (content[pos] == '\n' || content[pos] == ' ')) ++pos;
    auto space = content.find(' ', pos);
    if (space == std::string_view::npos) throw SchemaError("embedding file: truncated token " + std::to_string(w));
    std::string token(content.substr(pos, space - pos));
    pos = space + 1;
    const std::size_t bytes = static_cast<std::size_t>(dim) * 4;
    if (pos + bytes > content.size()) throw SchemaError("embedding file: truncated vector for '" + token + "'");
    if (!keep || keep->count(token)) {
      for (int k = 0; k < dim; ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, content.data() + pos + 4 * static_cast<std::size_t>(k), 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        vec[k] = static_cast<double>(std::bit_cast<float>(bits));
      }
      store.add(token, vec);
    }
    pos += bytes;
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               const std::unordered_set<std::string>* keep) {
  std::string content = read_file(path);
  if (format == EmbeddingFormat::automatic) {
    format = path.extension() == ".bin" ? EmbeddingFormat::binary : EmbeddingFormat::text;
  }
  return format == EmbeddingFormat::binary ? parse_embeddings_binary(content, keep)
                                           : parse_embeddings_text(content, keep);
}

std::string serialize_embeddings_text(const EmbeddingStore& store) {
  std::string out = std::to_string(store.size()) + " " + std::to_string(store.dim()) + "\n";
  for (const auto& token : store.tokens()) {
    out += token;
    for (double v : store.vector(token)) {
      out.push_back(' ');
      out += format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

std::string serialize_embeddings_binary(const EmbeddingStore& store) {
  std::string out = std::to_string(store.size()) + " " + std::to_string(store.dim()) + "\n";
  for (const auto& token : store.tokens()) {
    out += token;
    out.push_back(' ');
    for (double v : store.vector(token)) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char buf[4];
      std::memcpy(buf, &bits, 4);
      out.append(buf, 4);
    }
    out.push_back('\n');
  }
  return out;
}

WeightedDocResult to_weighted_doc(const std::vector<std::string>& tokens, const EmbeddingStore& store) {
  WeightedDocResult result;
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& t : tokens) {
    if (store.contains(t)) {
      ++counts[t];
      ++total;
    } else {
      result.oov.push_back(t);
    }
  }
  for (const auto& [token, count] : counts) {
    result.doc.tokens.push_back(token);
    result.doc.weights.push_back(static_cast<double>(count) / static_cast<double>(total));
  }
  return result;
}

Eigen::MatrixXd ground_cost(const WeightedDoc& a, const WeightedDoc& b, const EmbeddingStore& store) {
  Eigen::MatrixXd cost(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    auto va = store.vector(a.tokens[i]);
    for (std::size_t j = 0; j < b.tokens.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (va - store.vector(b.tokens[j])).norm();
    }
  }
  return cost;
}

double wmd(const WeightedDoc& a, const WeightedDoc& b, const EmbeddingStore& store) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wmd: EmptyDoc argument");
  if (a == b) return 0.0;
  const bool swap = std::tie(b.tokens, b.weights) < std::tie(a.tokens, a.weights);
  const WeightedDoc& first = swap ? b : a;
  const WeightedDoc& second = swap ? a : b;
  Eigen::Map<const Eigen::VectorXd> supply(first.weights.data(), static_cast<Eigen::Index>(first.weights.size()));
  Eigen::Map<const Eigen::VectorXd> demand(second.weights.data(), static_cast<Eigen::Index>(second.weights.size()));
  auto solution = transport::solve<double>(supply, demand, ground_cost(first, second, store));
  return std::max(solution.cost, 0.0);
}

PairwiseResult pairwise_distances(const std::vector<std::string>& values, const EmbeddingStore& store,
                                  const StopWords& stopwords, const PairwiseOptions& options) {
  PairwiseResult result;
  std::vector<std::string> labels = values;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const auto n = static_cast<Eigen::Index>(labels.size());

  std::vector<WeightedDoc> docs;
  docs.reserve(labels.size());
  for (const auto& label : labels) {
    auto wd = to_weighted_doc(tokenize(label, stopwords), store);
    if (!wd.oov.empty()) result.oov.emplace_back(label, wd.oov);
    if (wd.doc.empty()) result.empty_docs.push_back(label);
    docs.push_back(std::move(wd.doc));
  }

  DistanceMatrixd& d = result.matrix;
  d.labels = labels;
  d.values = Eigen::MatrixXd::Zero(n, n);
  d.flagged = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, std::max<Eigen::Index>(n, 1)));
  // Each worker owns whole rows (strided), cells are pure functions of the
  // two documents, so the result does not depend on the thread count.
  auto work = [&](unsigned t) {
    for (Eigen::Index i = t; i < n; i += threads) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (docs[i].empty() || docs[j].empty()) {
          d.flagged(i, j) = d.flagged(j, i) = true;
          continue;
        }
        double v = wmd(docs[i], docs[j], store);
        d.values(i, j) = v;
        d.values(j, i) = v;
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  if (!result.empty_docs.empty()) {
    double max_finite = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (!d.flagged(i, j)) max_finite = std::max(max_finite, d.values(i, j));
    const double sentinel = 1.0 + max_finite;
    d.sentinel = sentinel;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (d.flagged(i, j)) d.values(i, j) = labels[i] == labels[j] ? 0.0 : sentinel;
  }
  return result;
}

std::string distance_matrix_csv(const DistanceMatrixd& d) {
  std::vector<std::string> header{""};
  header.insert(header.end(), d.labels.begin(), d.labels.end());
  std::string out = csv::join_row(header);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    std::vector<std::string> row{d.labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < d.size(); ++j) row.push_back(format_double(d.values(i, j)));
    out += csv::join_row(row);
  }
  return out;
}

}  // namespace jobskill::embed
