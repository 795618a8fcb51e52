#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocluster/assignment.hpp"
#include "cocluster/dataset.hpp"
#include "cocluster/geo.hpp"

namespace cocluster {

using IndexPair = std::pair<int, int>;  // stored with first < second

/// Within-domain pairwise constraints. Pairs are unordered and self-pairs
/// are ignored on insertion.
struct LinkSet {
  Domain domain = Domain::Face;
  std::set<IndexPair> must;
  std::set<IndexPair> cannot;

  void add_must(int i, int j) {
    if (i == j) return;
    must.emplace(std::min(i, j), std::max(i, j));
  }
  void add_cannot(int i, int j) {
    if (i == j) return;
    cannot.emplace(std::min(i, j), std::max(i, j));
  }
  bool empty() const { return must.empty() && cannot.empty(); }
};

inline LinkSet merge_links(const LinkSet& a, const LinkSet& b) {
  if (a.domain != b.domain) throw std::invalid_argument("cannot merge link sets across domains");
  LinkSet out = a;
  out.must.insert(b.must.begin(), b.must.end());
  out.cannot.insert(b.cannot.begin(), b.cannot.end());
  return out;
}

/// Temporal grouping of images; each group also carries the location patch
/// indices taken inside it (the nonzero diagonal of its selector).
struct TimeGroups {
  std::vector<std::vector<int>> image_indices;
  std::vector<std::vector<int>> location_indices;

  int count() const { return static_cast<int>(image_indices.size()); }
};

// ---------------------------------------------------------------------------
// Link generation rules
// ---------------------------------------------------------------------------

/// Two faces in one image are different people.
inline LinkSet cannot_links_faces_same_image(const Dataset& ds) {
  LinkSet out;
  out.domain = Domain::Face;
  for (const auto& img : ds.images) {
    for (std::size_t a = 0; a < img.faces.size(); ++a) {
      for (std::size_t b = a + 1; b < img.faces.size(); ++b) {
        out.add_cannot(img.faces[a], img.faces[b]);
      }
    }
  }
  return out;
}

/// Faces photographed far apart within a short window cannot be one person.
/// Images without geo tags are skipped.
inline LinkSet cannot_links_faces_teleport(const Dataset& ds, std::int64_t window_s,
                                           double geo_threshold_km) {
  LinkSet out;
  out.domain = Domain::Face;
  const auto& images = ds.images;
  for (std::size_t a = 0; a < images.size(); ++a) {
    if (!images[a].geo || images[a].faces.empty()) continue;
    for (std::size_t b = a + 1; b < images.size(); ++b) {
      if (!images[b].geo || images[b].faces.empty()) continue;
      const std::int64_t dt = std::llabs(images[a].timestamp - images[b].timestamp);
      if (dt > window_s) continue;
      if (haversine_km(*images[a].geo, *images[b].geo) <= geo_threshold_km) continue;
      for (int fa : images[a].faces) {
        for (int fb : images[b].faces) out.add_cannot(fa, fb);
      }
    }
  }
  return out;
}

/// Locations sharing an image belong to one place.
inline LinkSet must_links_locations_same_image(const Dataset& ds) {
  LinkSet out;
  out.domain = Domain::Location;
  for (const auto& img : ds.images) {
    for (std::size_t a = 0; a < img.locations.size(); ++a) {
      for (std::size_t b = a + 1; b < img.locations.size(); ++b) {
        out.add_must(img.locations[a], img.locations[b]);
      }
    }
  }
  return out;
}

/// Pre-verified geometric matches, ingested as-is.
inline LinkSet must_links_locations_verified(const Dataset& ds) {
  LinkSet out;
  out.domain = Domain::Location;
  const int nl = ds.num_locations();
  for (auto [a, b] : ds.verified_location_pairs) {
    if (a < 0 || a >= nl || b < 0 || b >= nl) {
      throw std::invalid_argument("verified pair (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") out of range");
    }
    out.add_must(a, b);
  }
  return out;
}

/// Location patches co-occurring with same-cluster faces inside one time
/// group describe the same place. Recomputed whenever the face clustering
/// changes.
inline LinkSet must_links_locations_shared_person(const Dataset& ds, const Assignment& faces,
                                                  const TimeGroups& groups) {
  if (faces.size() != ds.num_faces()) {
    throw std::invalid_argument("face assignment does not cover all face patches");
  }
  LinkSet out;
  out.domain = Domain::Location;
  std::map<int, std::vector<int>> by_cluster;  // face cluster -> locations, per group
  for (const auto& group : groups.image_indices) {
    by_cluster.clear();
    for (int img_index : group) {
      const auto& img = ds.images[static_cast<std::size_t>(img_index)];
      if (img.locations.empty()) continue;
      for (int f : img.faces) {
        auto& locs = by_cluster[faces.labels[static_cast<std::size_t>(f)]];
        locs.insert(locs.end(), img.locations.begin(), img.locations.end());
      }
    }
    for (auto& [cluster, locs] : by_cluster) {
      std::sort(locs.begin(), locs.end());
      locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
      for (std::size_t a = 0; a < locs.size(); ++a) {
        for (std::size_t b = a + 1; b < locs.size(); ++b) out.add_must(locs[a], locs[b]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency closure
// ---------------------------------------------------------------------------

struct ResolvedLinks {
  LinkSet links;
  int conflicts = 0;  // cannot pairs dropped because must took precedence
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace detail

/// Closes must pairs under transitivity and lifts cannot pairs to the
/// resulting components. A pair landing in both sets is dropped from cannot:
/// must links come from high-precision evidence, cannot links from
/// heuristics.
inline ResolvedLinks resolve_links(const LinkSet& raw) {
  int n = 0;
  for (const auto& p : raw.must) n = std::max(n, p.second + 1);
  for (const auto& p : raw.cannot) n = std::max(n, p.second + 1);

  detail::UnionFind uf(n);
  for (const auto& [a, b] : raw.must) uf.unite(a, b);

  std::map<int, std::vector<int>> components;  // root -> sorted members
  for (const auto& [a, b] : raw.must) {
    components[uf.find(a)];
  }
  for (int v = 0; v < n; ++v) {
    auto it = components.find(uf.find(v));
    if (it != components.end()) it->second.push_back(v);
  }

  ResolvedLinks out;
  out.links.domain = raw.domain;
  for (const auto& [root, members] : components) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        out.links.add_must(members[a], members[b]);
      }
    }
  }
  auto members_of = [&](int v) -> std::vector<int> {
    auto it = components.find(uf.find(v));
    if (it != components.end()) return it->second;
    return {v};
  };
  for (const auto& [a, b] : raw.cannot) {
    if (uf.find(a) == uf.find(b)) {
      ++out.conflicts;
      continue;
    }
    for (int x : members_of(a)) {
      for (int y : members_of(b)) out.links.add_cannot(x, y);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temporal grouping
// ---------------------------------------------------------------------------

/// 1-D mean shift over timestamps with a flat kernel. Points whose modes end
/// up closer than bandwidth/2 form one group.
inline TimeGroups build_time_groups(const Dataset& ds, double bandwidth_s) {
  if (ds.images.empty()) throw std::invalid_argument("cannot group an empty dataset");
  if (!(bandwidth_s > 0)) throw std::invalid_argument("bandwidth must be positive");

  const std::size_t n = ds.images.size();
  std::vector<double> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<double>(ds.images[i].timestamp);

  constexpr int kMaxIter = 500;
  constexpr double kTol = 1e-6;
  std::vector<double> mode(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = ts[i];
    for (int iter = 0; iter < kMaxIter; ++iter) {
      double sum = 0.0;
      int count = 0;
      for (double t : ts) {
        if (std::abs(t - x) <= bandwidth_s) {
          sum += t;
          ++count;
        }
      }
      const double next = sum / count;  // window always holds the point itself
      if (std::abs(next - x) <= kTol) {
        x = next;
        break;
      }
      x = next;
    }
    mode[i] = x;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mode[a] != mode[b] ? mode[a] < mode[b] : a < b;
  });

  TimeGroups out;
  double prev_mode = 0.0;
  for (std::size_t idx : order) {
    if (out.image_indices.empty() || mode[idx] - prev_mode >= bandwidth_s / 2.0) {
      out.image_indices.emplace_back();
    }
    out.image_indices.back().push_back(static_cast<int>(idx));
    prev_mode = mode[idx];
  }
  for (auto& group : out.image_indices) {
    std::sort(group.begin(), group.end());
    std::vector<int> locs;
    for (int img_index : group) {
      const auto& img = ds.images[static_cast<std::size_t>(img_index)];
      locs.insert(locs.end(), img.locations.begin(), img.locations.end());
    }
    std::sort(locs.begin(), locs.end());
    out.location_indices.push_back(std::move(locs));
  }
  return out;
}

/// CSV export (`domain,kind,i,j`) for inspection.
inline void save_links_csv(const std::filesystem::path& path, const LinkSet& links) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "domain,kind,i,j\n";
  for (const auto& [a, b] : links.must) {
    out << domain_name(links.domain) << ",must," << a << ',' << b << '\n';
  }
  for (const auto& [a, b] : links.cannot) {
    out << domain_name(links.domain) << ",cannot," << a << ',' << b << '\n';
  }
}

}  // namespace cocluster
