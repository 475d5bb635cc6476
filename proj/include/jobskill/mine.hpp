#pragma once

// Market-basket mining over per-ad skill sets: Apriori frequent itemsets,
// association rules with support / confidence / lift, top-k recommendations
// per antecedent and the advertisement segments they are mined on.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jobskill/corpus.hpp"
#include "jobskill/skillnet.hpp"

namespace jobskill::mine {

using SkillId = std::uint32_t;
using Itemset = std::vector<SkillId>;  // sorted, unique

struct TransactionSet {
  std::vector<Itemset> transactions;
  skillnet::SkillVocab universe;

  std::size_t size() const { return transactions.size(); }
};

// One transaction per ad (in corpus order) holding its vocabulary skills.
TransactionSet make_transactions(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab,
                                 const std::vector<std::size_t>& ad_indices);
TransactionSet make_transactions(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab);

struct FrequentItemset {
  Itemset items;
  std::size_t count = 0;
  std::size_t n_transactions = 0;

  double support() const { return static_cast<double>(count) / static_cast<double>(n_transactions); }
  bool operator==(const FrequentItemset&) const = default;
};

// count / n >= min_support, evaluated on exact counts with a 1e-9 slack for
// the decimal representation of min_support.
bool meets_support(std::size_t count, std::size_t n, double min_support);

// Level-wise search with downward-closure pruning; counts come from
// intersecting transaction bitsets. Result ordered by (size, items). Throws
// DataError for an empty transaction set, ConfigError for bad thresholds.
std::vector<FrequentItemset> apriori(const TransactionSet& t, double min_support, int max_len);

struct AssociationRule {
  Itemset antecedent;
  Itemset consequent;
  std::size_t count_both = 0;
  std::size_t count_antecedent = 0;
  std::size_t count_consequent = 0;
  std::size_t n_transactions = 0;
  double support = 0;     // Support(X u Y)
  double confidence = 0;  // Support(X u Y) / Support(X)
  double lift = 0;        // Confidence / Support(Y)

  double consequent_support() const {
    return static_cast<double>(count_consequent) / static_cast<double>(n_transactions);
  }
};

// Every frequent itemset Z with |Z| >= 2 and every non-empty proper subset X
// yields X -> Z \ X when its lift reaches min_lift.
std::vector<AssociationRule> generate_rules(const std::vector<FrequentItemset>& itemsets, const TransactionSet& t,
                                            double min_lift);

// Per antecedent the k rules with the highest lift; ties prefer higher
// support, then the lexicographically smaller consequent (by skill name).
std::map<Itemset, std::vector<AssociationRule>> top_recommendations(const std::vector<AssociationRule>& rules,
                                                                    std::size_t k,
                                                                    const skillnet::SkillVocab& vocab);

std::vector<std::string> item_names(const Itemset& items, const skillnet::SkillVocab& vocab);
// "python → {machine learning} 3.266"; multi-skill antecedents are wrapped in
// parentheses: "(java script, html) → {css} 6.730".
std::string format_rule(const AssociationRule& rule, const skillnet::SkillVocab& vocab);

std::string itemsets_csv(const std::vector<FrequentItemset>& itemsets, const skillnet::SkillVocab& vocab);
std::string rules_csv(const std::vector<AssociationRule>& rules, const skillnet::SkillVocab& vocab);

// ---------------------------------------------------------------------------
// Segments

enum class Segment { all, high_vacancy, high_application, fresher, experienced };

Segment parse_segment(std::string_view name);
std::string_view segment_name(Segment s);

struct SegmentOptions {
  std::int64_t vacancy_threshold = 4;     // high vacancy: vacancy > threshold
  double application_percentile = 90.0;  // high application: apply_count >= this percentile
};

struct SegmentSelection {
  std::vector<std::size_t> ads;  // indices into the corpus, ascending
  // Resolved thresholds, for the report.
  std::optional<double> mean_min_experience;
  std::optional<std::int64_t> apply_count_threshold;
};

// fresher: min_experience == 0; experienced: min_experience above the corpus
// mean of min_experience (ads where it is present); high_vacancy: vacancy >
// threshold; high_application: apply_count at or above the nearest-rank
// percentile. Ads missing the relevant field are never selected.
SegmentSelection select_segment(const corpus::Corpus& corpus, Segment segment, const SegmentOptions& options = {});

struct SegmentBaskets {
  TransactionSet transactions;
  SegmentSelection selection;
  std::optional<std::string> warning;  // set when the segment is empty
};

SegmentBaskets segment_baskets(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab, Segment segment,
                               const SegmentOptions& options = {});

}  // namespace jobskill::mine
