#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cocluster/common.hpp"
#include "cocluster/csv.hpp"
#include "cocluster/geo.hpp"

namespace cocluster {

enum class Domain { Face, Location };

inline const char* domain_name(Domain d) { return d == Domain::Face ? "face" : "location"; }

struct PatchId {
  Domain domain;
  int index;
};

struct ImageRecord {
  std::string id;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::optional<GeoPoint> geo;
  std::vector<int> faces;      // face patch indices
  std::vector<int> locations;  // location patch indices
};

struct Dataset {
  std::vector<ImageRecord> images;
  Matrix face_features;      // N_F x d_F, one row per face patch
  Matrix location_features;  // N_L x d_L
  std::vector<std::pair<int, int>> verified_location_pairs;

  int num_faces() const { return static_cast<int>(face_features.rows()); }
  int num_locations() const { return static_cast<int>(location_features.rows()); }
};

/// Binary location-by-face incidence: entry (l, f) = 1 iff patches l and f
/// share an image.
struct CooccurrenceMatrix {
  Matrix entries;  // N_L x N_F
};

struct GroundTruth {
  std::vector<int> face_labels;
  std::vector<int> location_labels;
};

namespace detail {

inline void check_patch_list(const std::vector<int>& list, int count, const char* what,
                             const std::string& image_id, std::vector<int>& seen) {
  for (int p : list) {
    if (p < 0 || p >= count) {
      throw std::invalid_argument("image '" + image_id + "' references " + what + " patch " +
                                  std::to_string(p) + " but only " + std::to_string(count) +
                                  " rows exist");
    }
    if (++seen[static_cast<std::size_t>(p)] > 1) {
      throw std::invalid_argument(std::string(what) + " patch " + std::to_string(p) +
                                  " appears in more than one image (or twice in '" + image_id +
                                  "')");
    }
  }
}

}  // namespace detail

/// Enforces all structural invariants; throws std::invalid_argument on the
/// first violation.
inline void validate(const Dataset& ds) {
  const int nf = ds.num_faces();
  const int nl = ds.num_locations();
  std::vector<int> face_seen(static_cast<std::size_t>(nf), 0);
  std::vector<int> loc_seen(static_cast<std::size_t>(nl), 0);
  for (const auto& img : ds.images) {
    detail::check_patch_list(img.faces, nf, "face", img.id, face_seen);
    detail::check_patch_list(img.locations, nl, "location", img.id, loc_seen);
  }
  for (int p = 0; p < nf; ++p) {
    if (face_seen[static_cast<std::size_t>(p)] == 0) {
      throw std::invalid_argument("face patch " + std::to_string(p) + " belongs to no image");
    }
  }
  for (int p = 0; p < nl; ++p) {
    if (loc_seen[static_cast<std::size_t>(p)] == 0) {
      throw std::invalid_argument("location patch " + std::to_string(p) + " belongs to no image");
    }
  }
  for (auto [a, b] : ds.verified_location_pairs) {
    if (a < 0 || a >= nl || b < 0 || b >= nl) {
      throw std::invalid_argument("verified pair (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") references an invalid location patch");
    }
  }
}

inline void validate(const GroundTruth& gt, const Dataset& ds) {
  auto check = [](const std::vector<int>& labels, int n, const char* what) {
    if (static_cast<int>(labels.size()) != n) {
      throw std::invalid_argument(std::string("ground truth ") + what + " labels: expected " +
                                  std::to_string(n) + " entries, got " +
                                  std::to_string(labels.size()));
    }
    int k = 0;
    for (int v : labels) {
      if (v < 0) throw std::invalid_argument(std::string(what) + " label is negative");
      k = std::max(k, v + 1);
    }
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    for (int v : labels) used[static_cast<std::size_t>(v)] = 1;
    for (int c = 0; c < k; ++c) {
      if (!used[static_cast<std::size_t>(c)]) {
        throw std::invalid_argument(std::string(what) + " labels are not dense: cluster " +
                                    std::to_string(c) + " is empty");
      }
    }
  };
  check(gt.face_labels, ds.num_faces(), "face");
  check(gt.location_labels, ds.num_locations(), "location");
}

/// Scales to unit Euclidean norm. A zero vector has no direction and is
/// rejected.
inline Vector l2_normalize(const Vector& v) {
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("cannot L2-normalize a zero vector");
  return v / n;
}

/// Concatenates (ratio * a, b); both parts are expected to be unit-norm
/// already so ratio alone sets their relative weight.
inline Vector combine_features(const Vector& a, const Vector& b, double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("feature weight ratio must be positive");
  Vector out(a.size() + b.size());
  out.head(a.size()) = ratio * a;
  out.tail(b.size()) = b;
  return out;
}

inline CooccurrenceMatrix build_cooccurrence(const Dataset& ds) {
  Matrix c = Matrix::Zero(ds.num_locations(), ds.num_faces());
  for (const auto& img : ds.images) {
    for (int l : img.locations) {
      for (int f : img.faces) c(l, f) = 1.0;
    }
  }
  return CooccurrenceMatrix{std::move(c)};
}

// ---------------------------------------------------------------------------
// Bundle I/O. A dataset bundle is a directory holding images.jsonl,
// face_features.csv, location_features.csv, verified_pairs.csv and an
// optional ground_truth.json. All indices are 0-based.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::pair<int, int>> read_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<int, int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns");
    }
    out.emplace_back(static_cast<int>(parse_int(fields[0])), static_cast<int>(parse_int(fields[1])));
  }
  return out;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const auto images_path = dir / "images.jsonl";
  std::ifstream in(images_path);
  if (!in) throw std::runtime_error("cannot open " + images_path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(images_path.string() + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
    ImageRecord rec;
    if (!j.contains("id") || !j["id"].is_string()) {
      throw std::runtime_error(images_path.string() + ":" + std::to_string(lineno) +
                               ": missing string field 'id'");
    }
    rec.id = j["id"].get<std::string>();
    if (!j.contains("timestamp") || !j["timestamp"].is_number_integer()) {
      throw std::runtime_error(images_path.string() + ":" + std::to_string(lineno) +
                               ": image '" + rec.id + "' is missing an integer timestamp");
    }
    rec.timestamp = j["timestamp"].get<std::int64_t>();
    const bool has_lat = j.contains("lat");
    const bool has_lon = j.contains("lon");
    if (has_lat != has_lon) {
      throw std::runtime_error(images_path.string() + ":" + std::to_string(lineno) +
                               ": 'lat' and 'lon' must be given together");
    }
    if (has_lat) rec.geo = GeoPoint{j["lat"].get<double>(), j["lon"].get<double>()};
    if (j.contains("faces")) rec.faces = j["faces"].get<std::vector<int>>();
    if (j.contains("locations")) rec.locations = j["locations"].get<std::vector<int>>();
    ds.images.push_back(std::move(rec));
  }
  ds.face_features = read_numeric_csv((dir / "face_features.csv").string());
  ds.location_features = read_numeric_csv((dir / "location_features.csv").string());
  ds.verified_location_pairs = detail::read_pairs_csv((dir / "verified_pairs.csv").string());
  validate(ds);
  return ds;
}

inline std::optional<GroundTruth> load_ground_truth(const std::filesystem::path& dir) {
  const auto path = dir / "ground_truth.json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(in);
  GroundTruth gt;
  gt.face_labels = j.at("face_labels").get<std::vector<int>>();
  gt.location_labels = j.at("location_labels").get<std::vector<int>>();
  return gt;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds,
                         const GroundTruth* truth = nullptr) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "images.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "images.jsonl").string());
    for (const auto& img : ds.images) {
      nlohmann::json j;
      j["id"] = img.id;
      j["timestamp"] = img.timestamp;
      if (img.geo) {
        j["lat"] = img.geo->lat_deg;
        j["lon"] = img.geo->lon_deg;
      }
      j["faces"] = img.faces;
      j["locations"] = img.locations;
      out << j.dump() << '\n';
    }
  }
  write_numeric_csv((dir / "face_features.csv").string(), ds.face_features);
  write_numeric_csv((dir / "location_features.csv").string(), ds.location_features);
  {
    std::ofstream out(dir / "verified_pairs.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "verified_pairs.csv").string());
    for (auto [a, b] : ds.verified_location_pairs) out << a << ',' << b << '\n';
  }
  if (truth != nullptr) {
    std::ofstream out(dir / "ground_truth.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "ground_truth.json").string());
    nlohmann::json j;
    j["face_labels"] = truth->face_labels;
    j["location_labels"] = truth->location_labels;
    out << j.dump(2) << '\n';
  }
}

}  // namespace cocluster
