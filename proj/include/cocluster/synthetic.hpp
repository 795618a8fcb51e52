#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocluster/dataset.hpp"
#include "cocluster/rng.hpp"

namespace cocluster {

/// Planted two-domain benchmark. Features are Gaussian blobs around random
/// unit-sphere centers; images pair each face patch with location patches so
/// that a face cluster co-occurs with its home location cluster with
/// probability `cooccurrence_strength`. Timestamps arrive in bursts of
/// images from one face cluster.
struct SyntheticConfig {
  int k_f = 5;
  int k_l = 5;
  int faces_per_cluster = 20;
  int locations_per_cluster = 20;
  int face_dim = 8;
  int location_dim = 8;
  double separation = 1.0;  // scale of the cluster centers
  double noise = 0.32;      // stddev of the isotropic feature noise
  double cooccurrence_strength = 0.9;
  double public_fraction = 0.2;  // fraction of location clusters shared by everyone
  int burst_images = 5;
  std::int64_t burst_gap_s = 86400;
  std::int64_t burst_step_s = 300;
  int verified_pairs_per_cluster = 3;
  bool with_geo = false;
};

namespace detail {

inline void check_synthetic(const SyntheticConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synthetic config: " + msg); };
  if (c.k_f < 1) fail("k_f must be >= 1");
  if (c.k_l < 1) fail("k_l must be >= 1");
  if (c.faces_per_cluster < 1) fail("faces_per_cluster must be >= 1");
  if (c.locations_per_cluster < 1) fail("locations_per_cluster must be >= 1");
  if (c.face_dim < 1 || c.location_dim < 1) fail("feature dimensions must be >= 1");
  if (c.separation < 0 || c.noise < 0) fail("separation and noise must be nonnegative");
  if (c.cooccurrence_strength < 0 || c.cooccurrence_strength > 1) {
    fail("cooccurrence_strength must lie in [0,1]");
  }
  if (c.public_fraction < 0 || c.public_fraction > 1) fail("public_fraction must lie in [0,1]");
  if (c.burst_images < 1) fail("burst_images must be >= 1");
  if (c.burst_step_s < 0 || c.burst_gap_s < 1) fail("burst timing must be positive");
  if (c.verified_pairs_per_cluster < 0) fail("verified_pairs_per_cluster must be >= 0");
  const long long nf = 1LL * c.k_f * c.faces_per_cluster;
  const long long nl = 1LL * c.k_l * c.locations_per_cluster;
  if (nl < nf) {
    fail("needs at least as many location patches as face patches "
         "(every image holds one face and at least one location)");
  }
}

inline Vector random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

inline Matrix blob_features(std::mt19937_64& rng, int k, int per_cluster, int dim,
                            double separation, double noise) {
  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) centers.push_back(separation * random_unit(rng, dim));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(k * per_cluster, dim);
  for (int c = 0; c < k; ++c) {
    for (int p = 0; p < per_cluster; ++p) {
      for (int j = 0; j < dim; ++j) {
        x(c * per_cluster + p, j) = centers[static_cast<std::size_t>(c)][j] + noise * gauss(rng);
      }
    }
  }
  return x;
}

}  // namespace detail

inline std::pair<Dataset, GroundTruth> generate_synthetic(const SyntheticConfig& cfg,
                                                          std::uint64_t seed) {
  detail::check_synthetic(cfg);
  auto rng = substream(seed, "generate");

  const int nf = cfg.k_f * cfg.faces_per_cluster;
  const int nl = cfg.k_l * cfg.locations_per_cluster;

  Dataset ds;
  GroundTruth gt;
  ds.face_features = detail::blob_features(rng, cfg.k_f, cfg.faces_per_cluster, cfg.face_dim,
                                           cfg.separation, cfg.noise);
  ds.location_features = detail::blob_features(rng, cfg.k_l, cfg.locations_per_cluster,
                                               cfg.location_dim, cfg.separation, cfg.noise);
  gt.face_labels.resize(static_cast<std::size_t>(nf));
  gt.location_labels.resize(static_cast<std::size_t>(nl));
  for (int i = 0; i < nf; ++i) gt.face_labels[static_cast<std::size_t>(i)] = i / cfg.faces_per_cluster;
  for (int i = 0; i < nl; ++i) gt.location_labels[static_cast<std::size_t>(i)] = i / cfg.locations_per_cluster;

  // A fraction of location clusters are public (everyone's non-home visits
  // land there); every face cluster still keeps its own home cluster, so
  // private-location evidence stays specific to one group of people.
  std::vector<int> cluster_order(static_cast<std::size_t>(cfg.k_l));
  std::iota(cluster_order.begin(), cluster_order.end(), 0);
  std::shuffle(cluster_order.begin(), cluster_order.end(), rng);
  const int n_public = static_cast<int>(std::lround(cfg.public_fraction * cfg.k_l));
  std::vector<int> public_clusters(cluster_order.begin(), cluster_order.begin() + n_public);
  std::sort(public_clusters.begin(), public_clusters.end());
  std::vector<int> home(static_cast<std::size_t>(cfg.k_f));
  for (int c = 0; c < cfg.k_f; ++c) {
    home[static_cast<std::size_t>(c)] = cluster_order[static_cast<std::size_t>(c) % cluster_order.size()];
  }

  std::vector<std::vector<int>> loc_pool(static_cast<std::size_t>(cfg.k_l));
  for (int c = 0; c < cfg.k_l; ++c) {
    auto& pool = loc_pool[static_cast<std::size_t>(c)];
    pool.resize(static_cast<std::size_t>(cfg.locations_per_cluster));
    std::iota(pool.begin(), pool.end(), c * cfg.locations_per_cluster);
  }

  std::vector<GeoPoint> cluster_geo(static_cast<std::size_t>(cfg.k_l));
  for (int c = 0; c < cfg.k_l; ++c) {
    cluster_geo[static_cast<std::size_t>(c)] = GeoPoint{
        -50.0 + 100.0 * (c + 0.5) / cfg.k_l,
        -160.0 + 320.0 * (((c * 7) % cfg.k_l) + 0.5) / cfg.k_l};
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.005, 0.005);

  // One image per face patch; a burst is one person's photo session at one
  // place, so the location cluster is rolled once per burst. That keeps the
  // no-teleport premise intact: nobody appears at two places in one window.
  std::vector<int> remaining_faces(static_cast<std::size_t>(cfg.k_f), cfg.faces_per_cluster);
  std::vector<std::vector<int>> images_by_loc_cluster(static_cast<std::size_t>(cfg.k_l));
  int next_face = 0;
  std::int64_t burst_index = 0;
  int faces_left = nf;
  while (faces_left > 0) {
    for (int c = 0; c < cfg.k_f && faces_left > 0; ++c) {
      auto& rem = remaining_faces[static_cast<std::size_t>(c)];
      if (rem == 0) continue;
      const int burst_n = std::min(cfg.burst_images, rem);
      const std::int64_t burst_start = burst_index * cfg.burst_gap_s;

      int burst_cluster;
      if (unit(rng) < cfg.cooccurrence_strength) {
        burst_cluster = home[static_cast<std::size_t>(c)];
      } else if (!public_clusters.empty()) {
        burst_cluster = public_clusters[rng() % public_clusters.size()];
      } else {
        burst_cluster = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.k_l));
      }

      for (int b = 0; b < burst_n; ++b) {
        ImageRecord img;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "img%05d", next_face);
        img.id = buf;
        img.timestamp = burst_start + b * cfg.burst_step_s;
        img.faces = {c * cfg.faces_per_cluster + (cfg.faces_per_cluster - rem)};
        --rem;
        ++next_face;

        int loc_cluster = burst_cluster;
        if (loc_pool[static_cast<std::size_t>(loc_cluster)].empty()) {
          // Fall back to the fullest pool once the intended cluster runs dry.
          int best = -1;
          for (int cand = 0; cand < cfg.k_l; ++cand) {
            if (!loc_pool[static_cast<std::size_t>(cand)].empty() &&
                (best < 0 || loc_pool[static_cast<std::size_t>(cand)].size() >
                                 loc_pool[static_cast<std::size_t>(best)].size())) {
              best = cand;
            }
          }
          loc_cluster = best;
        }
        auto& pool = loc_pool[static_cast<std::size_t>(loc_cluster)];
        img.locations = {pool.back()};
        pool.pop_back();
        if (cfg.with_geo) {
          GeoPoint g = cluster_geo[static_cast<std::size_t>(loc_cluster)];
          img.geo = GeoPoint{g.lat_deg + jitter(rng), g.lon_deg + jitter(rng)};
        }
        images_by_loc_cluster[static_cast<std::size_t>(loc_cluster)].push_back(
            static_cast<int>(ds.images.size()));
        ds.images.push_back(std::move(img));
      }
      ++burst_index;
      faces_left -= burst_n;
    }
  }

  // Leftover location patches join images that already drew from the same
  // cluster so same-image links stay consistent with the planted labels.
  int fallback_cursor = 0;
  for (int c = 0; c < cfg.k_l; ++c) {
    auto& pool = loc_pool[static_cast<std::size_t>(c)];
    const auto& hosts = images_by_loc_cluster[static_cast<std::size_t>(c)];
    std::size_t cursor = 0;
    while (!pool.empty()) {
      int img_index;
      if (!hosts.empty()) {
        img_index = hosts[cursor % hosts.size()];
        ++cursor;
      } else {
        img_index = fallback_cursor % static_cast<int>(ds.images.size());
        ++fallback_cursor;
      }
      ds.images[static_cast<std::size_t>(img_index)].locations.push_back(pool.back());
      pool.pop_back();
    }
  }

  // Verified matches are sampled inside each planted location cluster.
  if (cfg.locations_per_cluster >= 2) {
    std::uniform_int_distribution<int> pick(0, cfg.locations_per_cluster - 1);
    for (int c = 0; c < cfg.k_l; ++c) {
      for (int v = 0; v < cfg.verified_pairs_per_cluster; ++v) {
        int a = pick(rng), b = pick(rng);
        while (b == a) b = pick(rng);
        ds.verified_location_pairs.emplace_back(c * cfg.locations_per_cluster + a,
                                                c * cfg.locations_per_cluster + b);
      }
    }
  }

  validate(ds);
  return {std::move(ds), std::move(gt)};
}

}  // namespace cocluster
