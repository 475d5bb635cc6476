#include "jobskill/mine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "jobskill/error.hpp"
#include "jobskill/text.hpp"

namespace jobskill::mine {

TransactionSet make_transactions(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab,
                                 const std::vector<std::size_t>& ad_indices) {
  TransactionSet t;
  t.universe = vocab;
  t.transactions.reserve(ad_indices.size());
  for (auto i : ad_indices) {
    Itemset items;
    for (const auto& skill : corpus.ads.at(i).key_skills) {
      if (auto j = vocab.index_of(skill); j >= 0) items.push_back(static_cast<SkillId>(j));
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    t.transactions.push_back(std::move(items));
  }
  return t;
}

TransactionSet make_transactions(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_transactions(corpus, vocab, all);
}

bool meets_support(std::size_t count, std::size_t n, double min_support) {
  return static_cast<double>(count) >= min_support * static_cast<double>(n) - 1e-9;
}

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
  std::size_t c = 0;
  for (auto w : b) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

struct Level {
  std::vector<Itemset> items;
  std::vector<Bits> tids;
};

}  // namespace

std::vector<FrequentItemset> apriori(const TransactionSet& t, double min_support, int max_len) {
  if (t.transactions.empty()) throw DataError("apriori: empty transaction set");
  if (!(min_support > 0.0 && min_support <= 1.0)) throw ConfigError("mine.min_support: must be in (0, 1]");
  if (max_len < 1) throw ConfigError("mine.max_len: must be at least 1");

  const std::size_t n = t.size();
  const std::size_t words = (n + 63) / 64;
  const std::size_t m = t.universe.size();

  std::vector<Bits> single(m, Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (SkillId s : t.transactions[i]) {
      if (s >= m) throw LogicError("apriori: transaction item outside the universe");
      single[s][i / 64] |= std::uint64_t{1} << (i % 64);
    }
  }

  std::vector<FrequentItemset> out;
  Level level;
  for (SkillId s = 0; s < m; ++s) {
    std::size_t c = popcount(single[s]);
    if (c > 0 && meets_support(c, n, min_support)) {
      out.push_back({{s}, c, n});
      level.items.push_back({s});
      level.tids.push_back(std::move(single[s]));
    }
  }

  for (int k = 2; k <= max_len && level.items.size() > 1; ++k) {
    std::set<Itemset> previous(level.items.begin(), level.items.end());
    Level next;
    for (std::size_t a = 0; a < level.items.size(); ++a) {
      for (std::size_t b = a + 1; b < level.items.size(); ++b) {
        const Itemset& x = level.items[a];
        const Itemset& y = level.items[b];
        // Join only itemsets sharing the first k - 2 items; items are sorted,
        // so once prefixes differ no later b matches either.
        if (!std::equal(x.begin(), x.end() - 1, y.begin())) break;
        Itemset candidate = x;
        candidate.push_back(y.back());
        bool closed = true;
        for (std::size_t drop = 0; drop + 2 < candidate.size() && closed; ++drop) {
          Itemset subset;
          for (std::size_t q = 0; q < candidate.size(); ++q)
            if (q != drop) subset.push_back(candidate[q]);
          closed = previous.count(subset) != 0;
        }
        if (!closed) continue;
        Bits tids(words);
        for (std::size_t w = 0; w < words; ++w) tids[w] = level.tids[a][w] & level.tids[b][w];
        std::size_t c = popcount(tids);
        if (c > 0 && meets_support(c, n, min_support)) {
          out.push_back({candidate, c, n});
          next.items.push_back(std::move(candidate));
          next.tids.push_back(std::move(tids));
        }
      }
    }
    level = std::move(next);
  }
  return out;
}

std::vector<AssociationRule> generate_rules(const std::vector<FrequentItemset>& itemsets, const TransactionSet& t,
                                            double min_lift) {
  std::map<Itemset, std::size_t> count_of;
  for (const auto& f : itemsets) count_of[f.items] = f.count;
  const std::size_t n = t.size();
  auto lookup = [&](const Itemset& s) {
    auto it = count_of.find(s);
    if (it == count_of.end()) throw LogicError("generate_rules: itemsets are not closed under subsets");
    return it->second;
  };

  std::vector<AssociationRule> rules;
  for (const auto& z : itemsets) {
    const std::size_t size = z.items.size();
    if (size < 2) continue;
    for (std::uint32_t mask = 1; mask + 1 < (1u << size); ++mask) {
      AssociationRule r;
      for (std::size_t q = 0; q < size; ++q) {
        ((mask >> q) & 1u ? r.antecedent : r.consequent).push_back(z.items[q]);
      }
      r.count_both = z.count;
      r.count_antecedent = lookup(r.antecedent);
      r.count_consequent = lookup(r.consequent);
      r.n_transactions = n;
      const double total = static_cast<double>(n);
      const double support_x = static_cast<double>(r.count_antecedent) / total;
      const double support_y = static_cast<double>(r.count_consequent) / total;
      r.support = static_cast<double>(r.count_both) / total;
      r.confidence = r.support / support_x;
      r.lift = r.confidence / support_y;
      if (r.lift >= min_lift) rules.push_back(std::move(r));
    }
  }
  std::sort(rules.begin(), rules.end(), [](const auto& a, const auto& b) {
    return std::tie(a.antecedent, a.consequent) < std::tie(b.antecedent, b.consequent);
  });
  return rules;
}

std::vector<std::string> item_names(const Itemset& items, const skillnet::SkillVocab& vocab) {
  std::vector<std::string> names;
  for (auto s : items) names.push_back(vocab.skills.at(s));
  return names;
}

std::map<Itemset, std::vector<AssociationRule>> top_recommendations(const std::vector<AssociationRule>& rules,
                                                                    std::size_t k,
                                                                    const skillnet::SkillVocab& vocab) {
  if (k < 1) throw ConfigError("mine.top_k: must be at least 1");
  std::map<Itemset, std::vector<AssociationRule>> grouped;
  for (const auto& r : rules) grouped[r.antecedent].push_back(r);
  for (auto& [antecedent, list] : grouped) {
    std::sort(list.begin(), list.end(), [&](const auto& a, const auto& b) {
      if (a.lift != b.lift) return a.lift > b.lift;
      if (a.support != b.support) return a.support > b.support;
      return item_names(a.consequent, vocab) < item_names(b.consequent, vocab);
    });
    if (list.size() > k) list.resize(k);
  }
  return grouped;
}

namespace {
std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}
}  // namespace

std::string format_rule(const AssociationRule& rule, const skillnet::SkillVocab& vocab) {
  auto antecedent = item_names(rule.antecedent, vocab);
  std::string lhs = antecedent.size() == 1 ? antecedent.front() : "(" + join(antecedent, ", ") + ")";
  return lhs + " → {" + join(item_names(rule.consequent, vocab), ", ") + "} " + format_fixed(rule.lift, 3);
}

std::string itemsets_csv(const std::vector<FrequentItemset>& itemsets, const skillnet::SkillVocab& vocab) {
  std::string out = csv::join_row({"itemset", "size", "count", "support"});
  for (const auto& f : itemsets) {
    out += csv::join_row({join(item_names(f.items, vocab), "|"), std::to_string(f.items.size()),
                          std::to_string(f.count), format_double(f.support())});
  }
  return out;
}

std::string rules_csv(const std::vector<AssociationRule>& rules, const skillnet::SkillVocab& vocab) {
  std::string out = csv::join_row({"antecedent", "consequent", "support", "confidence", "lift"});
  for (const auto& r : rules) {
    out += csv::join_row({join(item_names(r.antecedent, vocab), "|"), join(item_names(r.consequent, vocab), "|"),
                          format_double(r.support), format_double(r.confidence), format_double(r.lift)});
  }
  return out;
}

Segment parse_segment(std::string_view name) {
  auto n = normalize_text(name);
  if (n == "all") return Segment::all;
  if (n == "high_vacancy") return Segment::high_vacancy;
  if (n == "high_application") return Segment::high_application;
  if (n == "fresher") return Segment::fresher;
  if (n == "experienced") return Segment::experienced;
  throw ConfigError("unknown segment '" + std::string(name) + "'");
}

std::string_view segment_name(Segment s) {
  switch (s) {
    case Segment::all: return "all";
    case Segment::high_vacancy: return "high_vacancy";
    case Segment::high_application: return "high_application";
    case Segment::fresher: return "fresher";
    case Segment::experienced: return "experienced";
  }
  return "all";
}

SegmentSelection select_segment(const corpus::Corpus& corpus, Segment segment, const SegmentOptions& options) {
  SegmentSelection sel;
  const auto& ads = corpus.ads;
  switch (segment) {
    case Segment::all:
      for (std::size_t i = 0; i < ads.size(); ++i) sel.ads.push_back(i);
      break;
    case Segment::high_vacancy:
      for (std::size_t i = 0; i < ads.size(); ++i)
        if (ads[i].vacancy && *ads[i].vacancy > options.vacancy_threshold) sel.ads.push_back(i);
      break;
    case Segment::fresher:
      for (std::size_t i = 0; i < ads.size(); ++i)
        if (ads[i].min_experience && *ads[i].min_experience == 0) sel.ads.push_back(i);
      break;
    case Segment::experienced: {
      double sum = 0;
      std::size_t count = 0;
      for (const auto& ad : ads) {
        if (ad.min_experience) {
          sum += static_cast<double>(*ad.min_experience);
          ++count;
        }
      }
      if (count == 0) break;
      const double mean = sum / static_cast<double>(count);
      sel.mean_min_experience = mean;
      for (std::size_t i = 0; i < ads.size(); ++i)
        if (ads[i].min_experience && static_cast<double>(*ads[i].min_experience) > mean) sel.ads.push_back(i);
      break;
    }
    case Segment::high_application: {
      std::vector<std::int64_t> counts;
      for (const auto& ad : ads)
        if (ad.apply_count) counts.push_back(*ad.apply_count);
      if (counts.empty()) break;
      std::sort(counts.begin(), counts.end());
      // Nearest-rank percentile.
      auto rank = static_cast<std::size_t>(
          std::ceil(options.application_percentile / 100.0 * static_cast<double>(counts.size())));
      rank = std::clamp<std::size_t>(rank, 1, counts.size());
      const std::int64_t threshold = counts[rank - 1];
      sel.apply_count_threshold = threshold;
      for (std::size_t i = 0; i < ads.size(); ++i)
        if (ads[i].apply_count && *ads[i].apply_count >= threshold) sel.ads.push_back(i);
      break;
    }
  }
  return sel;
}

SegmentBaskets segment_baskets(const corpus::Corpus& corpus, const skillnet::SkillVocab& vocab, Segment segment,
                               const SegmentOptions& options) {
  SegmentBaskets out;
  out.selection = select_segment(corpus, segment, options);
  out.transactions = make_transactions(corpus, vocab, out.selection.ads);
  if (out.selection.ads.empty()) out.warning = "segment " + std::string(segment_name(segment)) + " is empty";
  return out;
}

}  // namespace jobskill::mine
