#pragma once

// Content analysis (ranked frequency tables, skill-cluster distributions) and
// geospatial aggregation against an offline gazetteer.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jobskill/corpus.hpp"
#include "jobskill/mine.hpp"
#include "jobskill/semgroup.hpp"
#include "jobskill/skillnet.hpp"

namespace jobskill::analyze {

enum class Field { job_leader, skill, industry, role_category };

Field parse_field(std::string_view name);
std::string_view field_name(Field f);

struct FrequencyRow {
  std::string label;
  std::size_t count = 0;
  double share = 0;
};

struct FrequencyTable {
  std::string field;
  std::vector<FrequencyRow> rows;  // count descending, label ascending on ties
  std::size_t total = 0;
};

// Ad-level counts (a skill counts once per ad). Ads with an empty tag are not
// counted. job_leader requires a clustering with leaders; titles are folded
// onto their cluster leader. `ads` restricts the table to a subset.
FrequencyTable frequency_table(const corpus::Corpus& corpus, Field field,
                               const semgroup::SemanticClustering* clustering = nullptr,
                               const std::vector<std::size_t>* ads = nullptr);

// Columns: rank, label, count, share.
std::string frequency_csv(const FrequencyTable& table);
nlohmann::json to_json(const FrequencyTable& table);

struct ClusterShare {
  std::string cluster;  // display name
  std::size_t count = 0;
  double share = 0;
};

struct ClusterDistribution {
  std::vector<ClusterShare> rows;  // count descending, name ascending
  std::size_t contributions = 0;   // denominator of every share
  std::size_t ads = 0;             // ads considered
  std::size_t ads_without_cluster = 0;
};

// An ad contributes 1 to every cluster in which it lists at least one skill.
ClusterDistribution cluster_distribution(const corpus::Corpus& corpus, const skillnet::SkillClusterSet& clusters,
                                         const std::vector<std::size_t>* ads = nullptr);
nlohmann::json to_json(const ClusterDistribution& d);

struct GeoPoint {
  double lat = 0;
  double lon = 0;
};

struct Place {
  std::string name;
  GeoPoint point;
  std::string region;
};

struct Gazetteer {
  std::map<std::string, Place> entries;  // normalized name -> place

  const Place* find(std::string_view normalized) const;
};

// CSV with header name,lat,lon,region. Throws SchemaError on bad rows or
// coordinates out of range.
Gazetteer parse_gazetteer(std::string_view csv_text);
Gazetteer load_gazetteer(const std::filesystem::path& path);

// Splits a location string on ',', '/' and '&', truncates each piece at the
// first '(' and trims it.
std::vector<std::string> split_locations(std::string_view location);

struct GeocodeResult {
  std::vector<Place> resolved;
  std::vector<std::string> unresolved;  // pieces as written (trimmed)
};

GeocodeResult geocode(const std::vector<std::string>& locations, const Gazetteer& g);

struct GeoBucket {
  std::string city;
  GeoPoint point;
  std::string region;
  std::size_t ad_count = 0;
  std::map<std::string, std::size_t> cluster_distribution;
  std::optional<std::string> segment;
};

struct GeoAggregate {
  std::vector<GeoBucket> buckets;  // ad_count descending, city ascending
  // Ad basis: every ad with >= 1 location is resolved (>= 1 city found) or unresolved.
  std::size_t ads_with_location = 0;
  std::size_t ads_resolved = 0;
  std::size_t ads_unresolved = 0;
  // Location basis: sum of bucket ad_count plus unresolved pieces equals all pieces.
  std::size_t location_pieces = 0;
  std::size_t unresolved_pieces = 0;
  std::map<std::string, std::size_t> unresolved_names;
};

GeoAggregate geo_aggregate(const corpus::Corpus& corpus, const Gazetteer& g, const skillnet::SkillClusterSet& clusters,
                           const std::vector<std::size_t>* ads = nullptr,
                           std::optional<std::string> segment = std::nullopt);

// GeoJSON FeatureCollection of Point features.
nlohmann::json to_geojson(const GeoAggregate& geo);

}  // namespace jobskill::analyze
