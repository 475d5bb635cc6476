#include "jobskill/analyze.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

#include "jobskill/error.hpp"
#include "jobskill/text.hpp"

namespace jobskill::analyze {

Field parse_field(std::string_view name) {
  auto n = normalize_text(name);
  if (n == "job_leader") return Field::job_leader;
  if (n == "skill") return Field::skill;
  if (n == "industry") return Field::industry;
  if (n == "role_category") return Field::role_category;
  throw ConfigError("unknown frequency field '" + std::string(name) + "'");
}

std::string_view field_name(Field f) {
  switch (f) {
    case Field::job_leader: return "job_leader";
    case Field::skill: return "skill";
    case Field::industry: return "industry";
    case Field::role_category: return "role_category";
  }
  return "skill";
}

namespace {

std::vector<std::size_t> all_ads(const corpus::Corpus& corpus) {
  std::vector<std::size_t> ads(corpus.size());
  std::iota(ads.begin(), ads.end(), std::size_t{0});
  return ads;
}

}  // namespace

FrequencyTable frequency_table(const corpus::Corpus& corpus, Field field,
                               const semgroup::SemanticClustering* clustering, const std::vector<std::size_t>* ads) {
  if (field == Field::job_leader && !clustering) {
    throw ConfigError("frequency table over job_leader needs a title clustering");
  }
  const auto subset = ads ? *ads : all_ads(corpus);
  std::map<std::string, std::size_t> counts;
  for (auto i : subset) {
    const auto& ad = corpus.ads.at(i);
    switch (field) {
      case Field::job_leader: {
        const auto& cluster = clustering->cluster_of(normalize_text(ad.job_name));
        if (!cluster.leader) throw LogicError("title cluster of '" + cluster.exemplar + "' has no leader");
        ++counts[*cluster.leader];
        break;
      }
      case Field::skill: {
        std::set<std::string> distinct(ad.key_skills.begin(), ad.key_skills.end());
        for (const auto& s : distinct) ++counts[s];
        break;
      }
      case Field::industry:
        if (!ad.industry.empty()) ++counts[ad.industry];
        break;
      case Field::role_category:
        if (!ad.role_category.empty()) ++counts[ad.role_category];
        break;
    }
  }
  FrequencyTable table;
  table.field = std::string(field_name(field));
  for (const auto& [label, count] : counts) {
    table.rows.push_back({label, count, 0.0});
    table.total += count;
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  for (auto& row : table.rows) row.share = static_cast<double>(row.count) / static_cast<double>(table.total);
  return table;
}

std::string frequency_csv(const FrequencyTable& table) {
  std::string out = csv::join_row({"rank", table.field, "count", "share"});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out += csv::join_row({std::to_string(r + 1), row.label, std::to_string(row.count), format_double(row.share)});
  }
  return out;
}

nlohmann::json to_json(const FrequencyTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    rows.push_back({{"rank", r + 1}, {"label", row.label}, {"count", row.count}, {"share", row.share}});
  }
  return {{"field", table.field}, {"rows", rows}, {"total", table.total}};
}

ClusterDistribution cluster_distribution(const corpus::Corpus& corpus, const skillnet::SkillClusterSet& clusters,
                                         const std::vector<std::size_t>* ads) {
  const auto membership = clusters.membership();
  const auto subset = ads ? *ads : all_ads(corpus);
  std::vector<std::size_t> counts(clusters.clusters.size(), 0);
  ClusterDistribution out;
  out.ads = subset.size();
  for (auto i : subset) {
    std::set<std::size_t> touched;
    for (const auto& s : corpus.ads.at(i).key_skills) {
      if (auto it = membership.find(s); it != membership.end()) touched.insert(it->second);
    }
    if (touched.empty()) ++out.ads_without_cluster;
    for (auto c : touched) ++counts[c];
    out.contributions += touched.size();
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    out.rows.push_back({clusters.clusters[c].display_name(), counts[c],
                        static_cast<double>(counts[c]) / static_cast<double>(out.contributions)});
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) {
    return a.count != b.count ? a.count > b.count : a.cluster < b.cluster;
  });
  return out;
}

nlohmann::json to_json(const ClusterDistribution& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : d.rows) rows.push_back({{"cluster", r.cluster}, {"count", r.count}, {"share", r.share}});
  return {{"ads", d.ads},
          {"ads_without_cluster", d.ads_without_cluster},
          {"contributions", d.contributions},
          {"counting_rule", "an ad counts once for every skill cluster it touches; shares divide by contributions"},
          {"rows", rows}};
}

const Place* Gazetteer::find(std::string_view normalized) const {
  auto it = entries.find(std::string(normalized));
  return it == entries.end() ? nullptr : &it->second;
}

namespace {

double parse_coordinate(std::string_view text, double limit, std::string_view what, std::size_t row) {
  text = trim(text);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw SchemaError("gazetteer row " + std::to_string(row) + ": bad " + std::string(what));
  }
  if (!(v >= -limit && v <= limit)) {
    throw SchemaError("gazetteer row " + std::to_string(row) + ": " + std::string(what) + " out of range");
  }
  return v;
}

}  // namespace

Gazetteer parse_gazetteer(std::string_view csv_text) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw SchemaError("gazetteer: empty file");
  std::vector<std::string> header;
  for (const auto& h : rows.front()) header.push_back(normalize_text(h));
  if (header.size() < 4 || header[0] != "name" || header[1] != "lat" || header[2] != "lon" || header[3] != "region") {
    throw SchemaError("gazetteer: header must be name,lat,lon,region");
  }
  Gazetteer g;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 4) throw SchemaError("gazetteer row " + std::to_string(r + 1) + ": expected 4 columns");
    Place place;
    place.name = std::string(trim(row[0]));
    place.point.lat = parse_coordinate(row[1], 90.0, "latitude", r + 1);
    place.point.lon = parse_coordinate(row[2], 180.0, "longitude", r + 1);
    place.region = std::string(trim(row[3]));
    auto key = normalize_text(place.name);
    if (key.empty()) throw SchemaError("gazetteer row " + std::to_string(r + 1) + ": empty name");
    g.entries[key] = std::move(place);
  }
  return g;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) { return parse_gazetteer(read_file(path)); }

std::vector<std::string> split_locations(std::string_view location) {
  std::vector<std::string> pieces;
  std::string current;
  auto flush = [&] {
    std::string_view piece = current;
    if (auto paren = piece.find('('); paren != std::string_view::npos) piece = piece.substr(0, paren);
    piece = trim(piece);
    if (!piece.empty()) pieces.emplace_back(piece);
    current.clear();
  };
  for (char c : location) {
    if (c == ',' || c == '/' || c == '&') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return pieces;
}

GeocodeResult geocode(const std::vector<std::string>& locations, const Gazetteer& g) {
  GeocodeResult out;
  for (const auto& location : locations) {
    for (const auto& piece : split_locations(location)) {
      if (const Place* p = g.find(normalize_text(piece))) {
        out.resolved.push_back(*p);
      } else {
        out.unresolved.push_back(piece);
      }
    }
  }
  return out;
}

GeoAggregate geo_aggregate(const corpus::Corpus& corpus, const Gazetteer& g, const skillnet::SkillClusterSet& clusters,
                           const std::vector<std::size_t>* ads, std::optional<std::string> segment) {
  const auto membership = clusters.membership();
  const auto subset = ads ? *ads : all_ads(corpus);
  std::map<std::string, GeoBucket> buckets;
  GeoAggregate out;
  for (auto i : subset) {
    const auto& ad = corpus.ads.at(i);
    auto coded = geocode(ad.locations, g);
    if (coded.resolved.empty() && coded.unresolved.empty()) continue;
    ++out.ads_with_location;
    out.unresolved_pieces += coded.unresolved.size();
    for (const auto& u : coded.unresolved) ++out.unresolved_names[u];
    if (coded.resolved.empty()) {
      ++out.ads_unresolved;
      continue;
    }
    ++out.ads_resolved;

    std::set<std::string> cluster_names;
    for (const auto& s : ad.key_skills) {
      if (auto it = membership.find(s); it != membership.end()) {
        cluster_names.insert(clusters.clusters[it->second].display_name());
      }
    }
    std::set<std::string> cities;
    for (const auto& place : coded.resolved) {
      if (!cities.insert(place.name).second) continue;
      auto [it, inserted] = buckets.try_emplace(place.name);
      GeoBucket& b = it->second;
      if (inserted) {
        b.city = place.name;
        b.point = place.point;
        b.region = place.region;
        b.segment = segment;
      }
      ++b.ad_count;
      for (const auto& c : cluster_names) ++b.cluster_distribution[c];
    }
    out.location_pieces += cities.size();
  }
  out.location_pieces += out.unresolved_pieces;
  for (auto& [name, bucket] : buckets) out.buckets.push_back(std::move(bucket));
  std::stable_sort(out.buckets.begin(), out.buckets.end(),
                   [](const auto& a, const auto& b) { return a.ad_count > b.ad_count; });
  return out;
}

nlohmann::json to_geojson(const GeoAggregate& geo) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& b : geo.buckets) {
    nlohmann::json properties = {{"ad_count", b.ad_count},
                                 {"city", b.city},
                                 {"cluster_distribution", b.cluster_distribution},
                                 {"region", b.region}};
    if (b.segment) properties["segment"] = *b.segment;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {b.point.lon, b.point.lat}}}},
                        {"properties", properties}});
  }
  return {{"type", "FeatureCollection"},
          {"features", features},
          {"summary",
           {{"ads_resolved", geo.ads_resolved},
            {"ads_unresolved", geo.ads_unresolved},
            {"ads_with_location", geo.ads_with_location},
            {"location_pieces", geo.location_pieces},
            {"unresolved_names", geo.unresolved_names},
            {"unresolved_pieces", geo.unresolved_pieces}}}};
}

}  // namespace jobskill::analyze
