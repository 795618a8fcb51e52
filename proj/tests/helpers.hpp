#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cocluster/assignment.hpp"
#include "cocluster/dataset.hpp"

namespace testutil {

using cocluster::Dataset;
using cocluster::GeoPoint;
using cocluster::ImageRecord;
using cocluster::Matrix;

struct ImageSpec {
  std::vector<int> faces;
  std::vector<int> locations;
  std::int64_t timestamp = 0;
  std::optional<GeoPoint> geo;
};

// Builds a validated dataset; feature rows default to distinct unit basis
// coordinates so counts alone define the fixture.
inline Dataset make_dataset(const std::vector<ImageSpec>& images, int n_faces, int n_locations,
                            int face_dim = 2, int loc_dim = 2) {
  Dataset ds;
  ds.face_features = Matrix::Zero(n_faces, face_dim);
  for (int i = 0; i < n_faces; ++i) ds.face_features(i, i % face_dim) = 1.0 + i;
  ds.location_features = Matrix::Zero(n_locations, loc_dim);
  for (int i = 0; i < n_locations; ++i) ds.location_features(i, i % loc_dim) = 1.0 + i;
  int counter = 0;
  for (const auto& spec : images) {
    ImageRecord img;
    img.id = "img" + std::to_string(counter++);
    img.timestamp = spec.timestamp;
    img.geo = spec.geo;
    img.faces = spec.faces;
    img.locations = spec.locations;
    ds.images.push_back(img);
  }
  cocluster::validate(ds);
  return ds;
}

// Every patch in its own image, timestamps spaced far apart.
inline std::vector<ImageSpec> singleton_images(int n_faces, int n_locations) {
  std::vector<ImageSpec> images;
  std::int64_t t = 0;
  for (int f = 0; f < n_faces; ++f) images.push_back({{f}, {}, t += 100000});
  for (int l = 0; l < n_locations; ++l) images.push_back({{}, {l}, t += 100000});
  return images;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cocluster_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline cocluster::Assignment random_assignment(std::mt19937_64& rng, int n, int k) {
  cocluster::Assignment a;
  a.k = k;
  a.labels.resize(static_cast<std::size_t>(n));
  while (true) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::vector<int> used(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      a.labels[static_cast<std::size_t>(i)] = pick(rng);
      used[static_cast<std::size_t>(a.labels[static_cast<std::size_t>(i)])] = 1;
    }
    bool ok = true;
    for (int c = 0; c < k; ++c) ok = ok && used[static_cast<std::size_t>(c)] == 1;
    if (ok) return a;
  }
}

inline Matrix random_features(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
  }
  return x;
}

}  // namespace testutil
