#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocluster/cocluster.hpp"
#include "cocluster/dataset.hpp"
#include "cocluster/geo.hpp"
#include "cocluster/kkmeans.hpp"
#include "cocluster/rng.hpp"

namespace cocluster {

// ---------------------------------------------------------------------------
// Partition agreement metrics
// ---------------------------------------------------------------------------

namespace detail {

struct PairCounts {
  double together = 0.0;   // sum over contingency cells of C(m, 2)
  double pred = 0.0;       // sum over predicted clusters of C(a, 2)
  double truth = 0.0;      // sum over true clusters of C(b, 2)
  double all = 0.0;        // C(n, 2)
};

inline PairCounts pair_counts(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("label vectors differ in length");
  const std::size_t n = pred.size();
  if (n < 2) throw std::invalid_argument("need at least two points to compare partitions");
  std::map<int, long long> ca, cb;
  std::map<std::pair<int, int>, long long> cab;
  for (std::size_t i = 0; i < n; ++i) {
    ++ca[pred[i]];
    ++cb[truth[i]];
    ++cab[{pred[i], truth[i]}];
  }
  auto c2 = [](long long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
  PairCounts pc;
  for (const auto& [label, count] : ca) pc.pred += c2(count);
  for (const auto& [label, count] : cb) pc.truth += c2(count);
  for (const auto& [cell, count] : cab) pc.together += c2(count);
  pc.all = c2(static_cast<long long>(n));
  return pc;
}

}  // namespace detail

/// Fraction of point pairs on which two partitions agree (co-clustered in
/// both or separated in both).
inline double rand_index(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto pc = detail::pair_counts(pred, truth);
  return (pc.all + 2.0 * pc.together - pc.pred - pc.truth) / pc.all;
}

inline double rand_index(const Assignment& pred, const std::vector<int>& truth) {
  return rand_index(pred.labels, truth);
}

/// Chance-corrected companion metric, reported alongside the plain index.
inline double adjusted_rand_index(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto pc = detail::pair_counts(pred, truth);
  const double expected = pc.pred * pc.truth / pc.all;
  const double max_index = 0.5 * (pc.pred + pc.truth);
  const double denom = max_index - expected;
  if (std::abs(denom) < 1e-12) return 1.0;  // both partitions trivial
  return (pc.together - expected) / denom;
}

// ---------------------------------------------------------------------------
// Geo ground truth
// ---------------------------------------------------------------------------

/// Single-linkage agglomerative clustering of geo points under haversine
/// distance, merged down to exactly `target_clusters`. Ties pick the merge
/// with the smallest (representative) index pair.
inline std::vector<int> geo_ground_truth(const std::vector<GeoPoint>& points, int target_clusters) {
  const int n = static_cast<int>(points.size());
  if (target_clusters < 1) throw std::invalid_argument("target cluster count must be >= 1");
  if (n < target_clusters) throw std::invalid_argument("fewer points than requested clusters");

  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  if (target_clusters == n) return label;

  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double h = haversine_km(points[static_cast<std::size_t>(i)],
                                    points[static_cast<std::size_t>(j)]);
      d(i, j) = h;
      d(j, i) = h;
    }
  }

  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  std::vector<int> rep(static_cast<std::size_t>(n));  // smallest member index
  std::iota(rep.begin(), rep.end(), 0);

  auto better = [&](double dist, int a, int b, double best, int ba, int bb) {
    if (ba < 0) return true;
    if (dist != best) return dist < best;
    const auto key = std::minmax(rep[static_cast<std::size_t>(a)], rep[static_cast<std::size_t>(b)]);
    const auto best_key = std::minmax(rep[static_cast<std::size_t>(ba)], rep[static_cast<std::size_t>(bb)]);
    return key < best_key;
  };

  int clusters = n;
  while (clusters > target_clusters) {
    int ba = -1, bb = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        if (better(d(i, j), i, j, best, ba, bb)) {
          best = d(i, j);
          ba = i;
          bb = j;
        }
      }
    }
    // Merge bb into ba with single-linkage (min) distance updates.
    for (int x = 0; x < n; ++x) {
      if (!alive[static_cast<std::size_t>(x)] || x == ba || x == bb) continue;
      const double m = std::min(d(ba, x), d(bb, x));
      d(ba, x) = m;
      d(x, ba) = m;
    }
    alive[static_cast<std::size_t>(bb)] = 0;
    rep[static_cast<std::size_t>(ba)] =
        std::min(rep[static_cast<std::size_t>(ba)], rep[static_cast<std::size_t>(bb)]);
    for (int x = 0; x < n; ++x) {
      if (label[static_cast<std::size_t>(x)] == bb) label[static_cast<std::size_t>(x)] = ba;
    }
    --clusters;
  }

  // Compact labels to [0, target_clusters).
  std::map<int, int> remap;
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = remap.try_emplace(label[static_cast<std::size_t>(i)],
                                            static_cast<int>(remap.size()));
    label[static_cast<std::size_t>(i)] = it->second;
  }
  return label;
}

// ---------------------------------------------------------------------------
// Lloyd k-means (explicit centroids), the baseline route
// ---------------------------------------------------------------------------

struct LloydResult {
  Assignment assignment;
  std::vector<double> objective_trace;  // within-cluster sum of squares
  int iterations = 0;
  int cannot_violations = 0;
};

/// Batch Lloyd iteration over raw features, with the same atomic-component
/// and cannot-skip rules as the kernel solver when links are given. Tie
/// break and empty-cluster repair mirror the kernel route so the two stay
/// label-identical on linear kernels.
inline LloydResult lloyd_kmeans(const Matrix& features, int k, const Assignment& init,
                                const LinkSet* links = nullptr, const SolveOptions& opts = {}) {
  const int n = static_cast<int>(features.rows());
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > n) throw std::invalid_argument("k exceeds the number of points");
  if (init.size() != n || init.k != k) {
    throw std::invalid_argument("initial assignment does not match features/k");
  }
  const ComponentStructure cs = build_components(opts.hard ? links : nullptr, n);
  if (opts.hard && cs.count() < k) {
    throw std::invalid_argument("must links leave fewer components than k");
  }

  std::vector<int> comp_labels = detail::snap_to_components(cs, init.labels, k);
  if (opts.hard) detail::make_feasible(cs, comp_labels, k);

  auto point_labels = [&]() {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int ci = 0; ci < cs.count(); ++ci) {
      for (int i : cs.members[static_cast<std::size_t>(ci)]) {
        out[static_cast<std::size_t>(i)] = comp_labels[static_cast<std::size_t>(ci)];
      }
    }
    return out;
  };

  struct Centroids {
    Matrix m;  // k x d
    std::vector<int> sizes;
  };
  auto centroids = [&]() {
    Centroids c;
    c.m = Matrix::Zero(k, features.cols());
    c.sizes.assign(static_cast<std::size_t>(k), 0);
    const auto labels = point_labels();
    for (int i = 0; i < n; ++i) {
      c.m.row(labels[static_cast<std::size_t>(i)]) += features.row(i);
      ++c.sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int cl = 0; cl < k; ++cl) {
      if (c.sizes[static_cast<std::size_t>(cl)] > 0) {
        c.m.row(cl) /= static_cast<double>(c.sizes[static_cast<std::size_t>(cl)]);
      }
    }
    return c;
  };
  auto point_dist = [&](const Centroids& c, int i, int cl) {
    if (c.sizes[static_cast<std::size_t>(cl)] == 0) return std::numeric_limits<double>::infinity();
    return (features.row(i) - c.m.row(cl)).squaredNorm();
  };
  auto comp_dist = [&](const Centroids& c, int ci, int cl) {
    double d = 0.0;
    for (int i : cs.members[static_cast<std::size_t>(ci)]) d += point_dist(c, i, cl);
    return d;
  };
  auto repair_empty = [&]() {
    while (true) {
      std::vector<int> comp_count(static_cast<std::size_t>(k), 0);
      for (int ci = 0; ci < cs.count(); ++ci) {
        ++comp_count[static_cast<std::size_t>(comp_labels[static_cast<std::size_t>(ci)])];
      }
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (comp_count[static_cast<std::size_t>(c)] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) return;
      const Centroids cen = centroids();
      int worst = -1;
      double worst_d = -std::numeric_limits<double>::infinity();
      for (int ci = 0; ci < cs.count(); ++ci) {
        const int cur = comp_labels[static_cast<std::size_t>(ci)];
        if (comp_count[static_cast<std::size_t>(cur)] < 2) continue;
        const double d = comp_dist(cen, ci, cur) /
                         static_cast<double>(cs.members[static_cast<std::size_t>(ci)].size());
        if (d > worst_d) {
          worst_d = d;
          worst = ci;
        }
      }
      if (worst < 0) return;
      comp_labels[static_cast<std::size_t>(worst)] = empty;
    }
  };
  auto objective = [&]() {
    const Centroids c = centroids();
    const auto labels = point_labels();
    double sse = 0.0;
    for (int i = 0; i < n; ++i) sse += point_dist(c, i, labels[static_cast<std::size_t>(i)]);
    return sse;
  };

  repair_empty();
  LloydResult res;
  res.objective_trace.push_back(objective());
  std::vector<int> prev = point_labels();
  std::vector<char> blocked(static_cast<std::size_t>(k));
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Centroids cen = centroids();
    for (int ci = 0; ci < cs.count(); ++ci) {
      std::fill(blocked.begin(), blocked.end(), 0);
      if (opts.hard) {
        for (int other : cs.cannot_adj[static_cast<std::size_t>(ci)]) {
          blocked[static_cast<std::size_t>(comp_labels[static_cast<std::size_t>(other)])] = 1;
        }
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        if (blocked[static_cast<std::size_t>(c)]) continue;
        const double d = comp_dist(cen, ci, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best < 0) {
        for (int c = 0; c < k; ++c) {
          const double d = comp_dist(cen, ci, c);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      }
      comp_labels[static_cast<std::size_t>(ci)] = best;
    }
    repair_empty();
    res.iterations = iter + 1;
    const double obj = objective();
    const double last = res.objective_trace.back();
    res.objective_trace.push_back(obj);
    std::vector<int> cur = point_labels();
    if (cur == prev) break;
    prev = std::move(cur);
    if (std::abs(obj - last) <= opts.tol * std::max(1.0, std::abs(last))) break;
  }
  res.assignment = Assignment{point_labels(), k};
  res.cannot_violations = detail::violated_pairs(cs, comp_labels);
  return res;
}

// ---------------------------------------------------------------------------
// Baselines and the K sweep protocol
// ---------------------------------------------------------------------------

enum class BaselineMethod { KMeansPlain, KMeansConstrained, KernelKMeansPlain };

inline const char* method_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::KMeansPlain: return "kmeans_plain";
    case BaselineMethod::KMeansConstrained: return "kmeans_constrained";
    case BaselineMethod::KernelKMeansPlain: return "kernel_kmeans_plain";
  }
  return "?";
}

inline std::optional<BaselineMethod> parse_baseline(const std::string& name) {
  if (name == "kmeans_plain") return BaselineMethod::KMeansPlain;
  if (name == "kmeans_constrained") return BaselineMethod::KMeansConstrained;
  if (name == "kernel_kmeans_plain") return BaselineMethod::KernelKMeansPlain;
  return std::nullopt;
}

/// Round-0 within-domain links: the rules that need no clustering result.
inline ResolvedLinks base_links(const Dataset& ds, Domain domain,
                                std::int64_t teleport_window_s = 3600,
                                double teleport_threshold_km = 100.0) {
  if (domain == Domain::Face) {
    LinkSet raw = cannot_links_faces_same_image(ds);
    raw = merge_links(raw, cannot_links_faces_teleport(ds, teleport_window_s, teleport_threshold_km));
    return resolve_links(raw);
  }
  LinkSet raw = merge_links(must_links_locations_same_image(ds), must_links_locations_verified(ds));
  return resolve_links(raw);
}

struct BaselineRun {
  Assignment assignment;
  std::vector<double> objective_trace;
  int cannot_violations = 0;
};

inline BaselineRun run_baseline_full(const Dataset& ds, Domain domain, BaselineMethod method,
                                     int k, std::uint64_t seed, const SolveOptions& opts = {}) {
  const Matrix& features = domain == Domain::Face ? ds.face_features : ds.location_features;
  const int n = static_cast<int>(features.rows());
  if (k > n) throw std::invalid_argument("k exceeds the number of patches");

  // A common random starting assignment keeps the methods comparable.
  Assignment init;
  init.k = k;
  init.labels.assign(static_cast<std::size_t>(n), 0);
  {
    auto rng = substream(seed, "baseline/init");
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (int i = 0; i < n; ++i) init.labels[static_cast<std::size_t>(i)] = pick(rng);
  }

  switch (method) {
    case BaselineMethod::KMeansPlain: {
      SolveOptions soft = opts;
      soft.hard = false;
      const LloydResult r = lloyd_kmeans(features, k, init, nullptr, soft);
      return {r.assignment, r.objective_trace, r.cannot_violations};
    }
    case BaselineMethod::KMeansConstrained: {
      const ResolvedLinks links = base_links(ds, domain);
      SolveOptions hard = opts;
      hard.hard = true;
      if (build_components(&links.links, n).count() < k) {
        hard.hard = false;  // over-merged must links: fall back to soft mode
      }
      const LloydResult r = lloyd_kmeans(features, k, init, hard.hard ? &links.links : nullptr,
                                         hard);
      return {r.assignment, r.objective_trace, r.cannot_violations};
    }
    case BaselineMethod::KernelKMeansPlain: {
      const AffinityMatrix a = affinity(features);
      KernelMatrix km;
      km.entries = 2.0 * a.entries;
      const double sigma = resolve_sigma(km.entries, SigmaPolicy::Gershgorin);
      km.entries.diagonal().array() += sigma;
      km.diagonal_shift = sigma;
      SolveOptions soft = opts;
      soft.hard = false;
      const SolveResult r = kernel_kmeans_from(km, k, nullptr, init, soft);
      return {r.assignment, r.objective_trace, r.cannot_violations};
    }
  }
  throw std::logic_error("unreachable");
}

inline Assignment run_baseline(const Dataset& ds, Domain domain, BaselineMethod method, int k,
                               std::uint64_t seed, const SolveOptions& opts = {}) {
  return run_baseline_full(ds, domain, method, k, seed, opts).assignment;
}

struct EvalRow {
  std::string domain;
  std::string method;
  int k = 0;
  std::uint64_t seed = 0;
  double rand_index = 0.0;
  double adjusted_rand_index = 0.0;
  double runtime_s = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

struct SweepSpec {
  int k_min = 2;
  int k_max = 13;
  std::vector<std::string> methods = {"cocluster", "kmeans_plain", "kmeans_constrained",
                                      "kernel_kmeans_plain"};
  std::vector<std::uint64_t> seeds = {0};
  CoClusterConfig base;  // shared driver settings; k and seed are overwritten
};

/// Runs every method at every K over every seed and records per-domain
/// agreement with the ground truth.
inline EvalReport sweep_k(const Dataset& ds, const GroundTruth& truth, const SweepSpec& spec) {
  if (spec.k_min < 2 || spec.k_max < spec.k_min) {
    throw std::invalid_argument("sweep needs 2 <= k_min <= k_max");
  }
  EvalReport report;
  using clock = std::chrono::steady_clock;
  for (const auto& method : spec.methods) {
    for (int k = spec.k_min; k <= spec.k_max; ++k) {
      for (std::uint64_t seed : spec.seeds) {
        if (method == "cocluster") {
          CoClusterConfig cfg = spec.base;
          cfg.k_f = k;
          cfg.k_l = k;
          cfg.seed = seed;
          const auto t0 = clock::now();
          const CoClusterResult res = cocluster(ds, cfg);
          const double dt = std::chrono::duration<double>(clock::now() - t0).count();
          report.rows.push_back({"face", method, k, seed,
                                 rand_index(res.faces.labels, truth.face_labels),
                                 adjusted_rand_index(res.faces.labels, truth.face_labels), dt});
          report.rows.push_back({"location", method, k, seed,
                                 rand_index(res.locations.labels, truth.location_labels),
                                 adjusted_rand_index(res.locations.labels, truth.location_labels),
                                 dt});
          continue;
        }
        const auto parsed = parse_baseline(method);
        if (!parsed) throw std::invalid_argument("unknown method: " + method);
        for (Domain domain : {Domain::Face, Domain::Location}) {
          const auto& labels =
              domain == Domain::Face ? truth.face_labels : truth.location_labels;
          const auto t0 = clock::now();
          const Assignment a = run_baseline(ds, domain, *parsed, k, seed, spec.base.inner);
          const double dt = std::chrono::duration<double>(clock::now() - t0).count();
          report.rows.push_back({domain_name(domain), method, k, seed,
                                 rand_index(a.labels, labels),
                                 adjusted_rand_index(a.labels, labels), dt});
        }
      }
    }
  }
  return report;
}

inline void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "domain,method,k,seed,rand_index,adjusted_rand_index,runtime_s\n";
  for (const auto& r : report.rows) {
    out << csv_quote(r.domain) << ',' << csv_quote(r.method) << ',' << r.k << ',' << r.seed << ','
        << format_double(r.rand_index) << ',' << format_double(r.adjusted_rand_index) << ','
        << format_double(r.runtime_s) << '\n';
  }
}

}  // namespace cocluster
