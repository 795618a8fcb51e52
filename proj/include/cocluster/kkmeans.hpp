#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocluster/assignment.hpp"
#include "cocluster/kernel.hpp"
#include "cocluster/links.hpp"
#include "cocluster/rng.hpp"

namespace cocluster {

inline double kernel_objective(const KernelMatrix& k, const IndicatorMatrix& z) {
  if (k.entries.rows() != z.entries.rows()) {
    throw std::invalid_argument("kernel and indicator sizes disagree");
  }
  return (z.entries.transpose() * k.entries * z.entries).trace();
}

enum class InitStrategy { Random, FarthestFirst };

struct SolveOptions {
  int max_iter = 100;
  double tol = 1e-6;  // relative objective change
  InitStrategy init = InitStrategy::FarthestFirst;
  bool hard = true;   // enforce must/cannot links structurally
};

struct SolveResult {
  Assignment assignment;
  std::vector<double> objective_trace;  // entry 0 is the initial assignment
  int iterations = 0;
  int cannot_violations = 0;  // violated component-level cannot pairs at exit
};

/// Must components and component-level cannot adjacency derived from a link
/// set. Points untouched by links form singleton components.
struct ComponentStructure {
  std::vector<std::vector<int>> members;  // sorted members per component
  std::vector<int> comp_of;               // point -> component
  std::vector<std::vector<int>> cannot_adj;

  int count() const { return static_cast<int>(members.size()); }
};

inline ComponentStructure build_components(const LinkSet* links, int n) {
  detail::UnionFind uf(n);
  if (links != nullptr) {
    for (const auto& [a, b] : links->must) {
      if (a >= n || b >= n) throw std::invalid_argument("link index out of range");
      uf.unite(a, b);
    }
  }
  ComponentStructure cs;
  cs.comp_of.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> root_comp(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (root_comp[static_cast<std::size_t>(r)] < 0) {
      root_comp[static_cast<std::size_t>(r)] = cs.count();
      cs.members.emplace_back();
    }
    const int c = root_comp[static_cast<std::size_t>(r)];
    cs.comp_of[static_cast<std::size_t>(i)] = c;
    cs.members[static_cast<std::size_t>(c)].push_back(i);
  }
  cs.cannot_adj.assign(static_cast<std::size_t>(cs.count()), {});
  if (links != nullptr) {
    std::set<IndexPair> seen;
    for (const auto& [a, b] : links->cannot) {
      if (a >= n || b >= n) throw std::invalid_argument("link index out of range");
      int ca = cs.comp_of[static_cast<std::size_t>(a)];
      int cb = cs.comp_of[static_cast<std::size_t>(b)];
      if (ca == cb) continue;  // conflicting pair; resolve_links drops these
      if (!seen.emplace(std::min(ca, cb), std::max(ca, cb)).second) continue;
      cs.cannot_adj[static_cast<std::size_t>(ca)].push_back(cb);
      cs.cannot_adj[static_cast<std::size_t>(cb)].push_back(ca);
    }
    for (auto& adj : cs.cannot_adj) std::sort(adj.begin(), adj.end());
  }
  return cs;
}

namespace detail {

inline int violated_pairs(const ComponentStructure& cs, const std::vector<int>& comp_labels) {
  int v = 0;
  for (int ci = 0; ci < cs.count(); ++ci) {
    for (int other : cs.cannot_adj[static_cast<std::size_t>(ci)]) {
      if (other > ci && comp_labels[static_cast<std::size_t>(other)] ==
                            comp_labels[static_cast<std::size_t>(ci)]) {
        ++v;
      }
    }
  }
  return v;
}

// Majority label of each component's members, ties to the lowest label.
inline std::vector<int> snap_to_components(const ComponentStructure& cs,
                                           const std::vector<int>& point_labels, int k) {
  std::vector<int> comp_labels(static_cast<std::size_t>(cs.count()), 0);
  for (int ci = 0; ci < cs.count(); ++ci) {
    std::vector<int> votes(static_cast<std::size_t>(k), 0);
    for (int i : cs.members[static_cast<std::size_t>(ci)]) {
      ++votes[static_cast<std::size_t>(point_labels[static_cast<std::size_t>(i)])];
    }
    int best = 0;
    for (int c = 1; c < k; ++c) {
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    comp_labels[static_cast<std::size_t>(ci)] = best;
  }
  return comp_labels;
}

// For k=2 a feasible labeling is forced per connected cannot component, so
// solve it exactly; larger k gets greedy conflict minimization. Infeasible
// instances keep their violations, which callers count and report.
inline void make_feasible(const ComponentStructure& cs, std::vector<int>& comp_labels, int k) {
  if (violated_pairs(cs, comp_labels) == 0) return;
  if (k == 2) {
    std::vector<int> side(static_cast<std::size_t>(cs.count()), -1);
    std::vector<int> stack;
    for (int start = 0; start < cs.count(); ++start) {
      if (side[static_cast<std::size_t>(start)] >= 0 ||
          cs.cannot_adj[static_cast<std::size_t>(start)].empty()) {
        continue;
      }
      std::vector<int> group;
      bool bipartite = true;
      side[static_cast<std::size_t>(start)] = 0;
      stack.push_back(start);
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        group.push_back(v);
        for (int u : cs.cannot_adj[static_cast<std::size_t>(v)]) {
          if (side[static_cast<std::size_t>(u)] < 0) {
            side[static_cast<std::size_t>(u)] = 1 - side[static_cast<std::size_t>(v)];
            stack.push_back(u);
          } else if (side[static_cast<std::size_t>(u)] == side[static_cast<std::size_t>(v)]) {
            bipartite = false;
          }
        }
      }
      if (!bipartite) continue;
      // Orient the two sides to agree with as many snapped points as possible.
      long agree = 0;
      long total = 0;
      for (int v : group) {
        const long sz = static_cast<long>(cs.members[static_cast<std::size_t>(v)].size());
        total += sz;
        if (comp_labels[static_cast<std::size_t>(v)] == side[static_cast<std::size_t>(v)]) {
          agree += sz;
        }
      }
      const bool flip = 2 * agree < total;
      for (int v : group) {
        const int s = side[static_cast<std::size_t>(v)];
        comp_labels[static_cast<std::size_t>(v)] = flip ? 1 - s : s;
      }
    }
    return;
  }
  for (int pass = 0; pass < cs.count(); ++pass) {
    bool changed = false;
    bool any_conflict = false;
    for (int ci = 0; ci < cs.count(); ++ci) {
      std::vector<int> conflicts(static_cast<std::size_t>(k), 0);
      for (int other : cs.cannot_adj[static_cast<std::size_t>(ci)]) {
        ++conflicts[static_cast<std::size_t>(comp_labels[static_cast<std::size_t>(other)])];
      }
      const int cur = comp_labels[static_cast<std::size_t>(ci)];
      if (conflicts[static_cast<std::size_t>(cur)] == 0) continue;
      any_conflict = true;
      int best = cur;
      for (int c = 0; c < k; ++c) {
        if (conflicts[static_cast<std::size_t>(c)] < conflicts[static_cast<std::size_t>(best)]) {
          best = c;
        }
      }
      if (best != cur) {
        comp_labels[static_cast<std::size_t>(ci)] = best;
        changed = true;
      }
    }
    if (!any_conflict || !changed) break;
  }
}

class KernelKMeansState {
 public:
  KernelKMeansState(const KernelMatrix& kernel, int k, const LinkSet* links,
                    const SolveOptions& opts)
      : k_(k), opts_(opts), entries_(kernel.entries) {
    n_ = static_cast<int>(entries_.rows());
    if (entries_.cols() != n_) throw std::invalid_argument("kernel matrix must be square");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (k > n_) throw std::invalid_argument("k exceeds the number of points");
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      throw std::invalid_argument("kernel matrix must be symmetric");
    }
    // The recorded shift is regularization, not similarity: discounting it
    // here makes assignments invariant to the shift (the trace objective
    // still moves by exactly sigma * k).
    effective_ = entries_;
    effective_.diagonal().array() -= kernel.diagonal_shift;
    cs_ = build_components(opts.hard ? links : nullptr, n_);
    if (opts.hard && cs_.count() < k) {
      throw std::invalid_argument("must links leave only " + std::to_string(cs_.count()) +
                                  " movable components, fewer than k=" + std::to_string(k));
    }
  }

  SolveResult run(const Assignment& init) {
    if (init.size() != n_ || init.k != k_) {
      throw std::invalid_argument("initial assignment does not match kernel/k");
    }
    comp_labels_ = snap_to_components(cs_, init.labels, k_);
    if (opts_.hard) make_feasible(cs_, comp_labels_, k_);
    repair_empty_clusters();

    SolveResult res;
    res.objective_trace.push_back(objective());
    std::vector<int> prev = point_labels();
    for (int iter = 0; iter < opts_.max_iter; ++iter) {
      sweep();
      repair_empty_clusters();
      res.iterations = iter + 1;
      const double obj = objective();
      const double last = res.objective_trace.back();
      res.objective_trace.push_back(obj);
      std::vector<int> cur = point_labels();
      if (cur == prev) break;
      prev = std::move(cur);
      if (std::abs(obj - last) <= opts_.tol * std::max(1.0, std::abs(last))) break;
    }
    res.assignment = Assignment{point_labels(), k_};
    res.cannot_violations = violated_pairs(cs_, comp_labels_);
    return res;
  }

 private:
  struct Stats {
    std::vector<int> sizes;
    Matrix colsum;  // N x k, within-cluster similarity sums
    Vector q;       // per-cluster mean self-similarity
  };

  Stats compute_stats() const {
    Stats st;
    st.sizes.assign(static_cast<std::size_t>(k_), 0);
    Matrix zbin = Matrix::Zero(n_, k_);
    for (int ci = 0; ci < cs_.count(); ++ci) {
      const int c = comp_labels_[static_cast<std::size_t>(ci)];
      for (int i : cs_.members[static_cast<std::size_t>(ci)]) {
        zbin(i, c) = 1.0;
        ++st.sizes[static_cast<std::size_t>(c)];
      }
    }
    st.colsum = effective_ * zbin;
    st.q = Vector::Zero(k_);
    for (int c = 0; c < k_; ++c) {
      const int sz = st.sizes[static_cast<std::size_t>(c)];
      if (sz > 0) {
        st.q[c] = zbin.col(c).dot(st.colsum.col(c)) / (static_cast<double>(sz) * sz);
      }
    }
    return st;
  }

  // Kernel-space squared distance from point i to the (snapshot) centroid c.
  double point_distance(const Stats& st, int i, int c) const {
    const int sz = st.sizes[static_cast<std::size_t>(c)];
    if (sz == 0) return std::numeric_limits<double>::infinity();
    return effective_(i, i) - 2.0 * st.colsum(i, c) / sz + st.q[c];
  }

  double comp_distance(const Stats& st, int ci, int c) const {
    double d = 0.0;
    for (int i : cs_.members[static_cast<std::size_t>(ci)]) d += point_distance(st, i, c);
    return d;
  }

  void sweep() {
    const Stats st = compute_stats();
    std::vector<char> blocked(static_cast<std::size_t>(k_));
    for (int ci = 0; ci < cs_.count(); ++ci) {
      std::fill(blocked.begin(), blocked.end(), 0);
      if (opts_.hard) {
        // Committed components are seen at their new label, the rest at the
        // snapshot label; a feasible sweep start therefore always keeps the
        // current cluster available.
        for (int other : cs_.cannot_adj[static_cast<std::size_t>(ci)]) {
          blocked[static_cast<std::size_t>(comp_labels_[static_cast<std::size_t>(other)])] = 1;
        }
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k_; ++c) {
        if (blocked[static_cast<std::size_t>(c)]) continue;
        const double d = comp_distance(st, ci, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best < 0) {
        // Every cluster holds a cannot neighbor; take the nearest one anyway.
        for (int c = 0; c < k_; ++c) {
          const double d = comp_distance(st, ci, c);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      }
      comp_labels_[static_cast<std::size_t>(ci)] = best;
    }
  }

  void repair_empty_clusters() {
    while (true) {
      std::vector<int> comp_count(static_cast<std::size_t>(k_), 0);
      for (int ci = 0; ci < cs_.count(); ++ci) {
        ++comp_count[static_cast<std::size_t>(comp_labels_[static_cast<std::size_t>(ci)])];
      }
      int empty = -1;
      for (int c = 0; c < k_; ++c) {
        if (comp_count[static_cast<std::size_t>(c)] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) return;
      const Stats st = compute_stats();
      int worst = -1;
      double worst_d = -std::numeric_limits<double>::infinity();
      for (int ci = 0; ci < cs_.count(); ++ci) {
        const int cur = comp_labels_[static_cast<std::size_t>(ci)];
        if (comp_count[static_cast<std::size_t>(cur)] < 2) continue;
        const double d = comp_distance(st, ci, cur) /
                         static_cast<double>(cs_.members[static_cast<std::size_t>(ci)].size());
        if (d > worst_d) {
          worst_d = d;
          worst = ci;
        }
      }
      if (worst < 0) return;  // cannot repair without emptying another cluster
      comp_labels_[static_cast<std::size_t>(worst)] = empty;
    }
  }

  std::vector<int> point_labels() const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    for (int ci = 0; ci < cs_.count(); ++ci) {
      for (int i : cs_.members[static_cast<std::size_t>(ci)]) {
        out[static_cast<std::size_t>(i)] = comp_labels_[static_cast<std::size_t>(ci)];
      }
    }
    return out;
  }

  double objective() const {
    Matrix zbin = Matrix::Zero(n_, k_);
    std::vector<int> sizes(static_cast<std::size_t>(k_), 0);
    for (int ci = 0; ci < cs_.count(); ++ci) {
      const int c = comp_labels_[static_cast<std::size_t>(ci)];
      for (int i : cs_.members[static_cast<std::size_t>(ci)]) {
        zbin(i, c) = 1.0;
        ++sizes[static_cast<std::size_t>(c)];
      }
    }
    const Matrix g = entries_ * zbin;
    double obj = 0.0;
    for (int c = 0; c < k_; ++c) {
      const int sz = sizes[static_cast<std::size_t>(c)];
      if (sz > 0) obj += zbin.col(c).dot(g.col(c)) / sz;
    }
    return obj;
  }

  int n_ = 0;
  int k_ = 0;
  SolveOptions opts_;
  Matrix entries_;
  Matrix effective_;
  ComponentStructure cs_;
  std::vector<int> comp_labels_;
};

}  // namespace detail

inline Assignment init_assignment(const KernelMatrix& kernel, int k, std::uint64_t seed,
                                  InitStrategy strategy) {
  const int n = static_cast<int>(kernel.entries.rows());
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > n) throw std::invalid_argument("k exceeds the number of points");
  auto rng = substream(seed, "init");
  Assignment a;
  a.k = k;
  a.labels.assign(static_cast<std::size_t>(n), 0);
  if (strategy == InitStrategy::Random) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (int i = 0; i < n; ++i) a.labels[static_cast<std::size_t>(i)] = pick(rng);
    // Refill empty clusters from the largest one.
    while (true) {
      std::vector<std::vector<int>> by_cluster(static_cast<std::size_t>(k));
      for (int i = 0; i < n; ++i) {
        by_cluster[static_cast<std::size_t>(a.labels[static_cast<std::size_t>(i)])].push_back(i);
      }
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (by_cluster[static_cast<std::size_t>(c)].empty()) {
          empty = c;
          break;
        }
      }
      if (empty < 0) break;
      int donor = 0;
      for (int c = 1; c < k; ++c) {
        if (by_cluster[static_cast<std::size_t>(c)].size() >
            by_cluster[static_cast<std::size_t>(donor)].size()) {
          donor = c;
        }
      }
      a.labels[static_cast<std::size_t>(by_cluster[static_cast<std::size_t>(donor)].back())] = empty;
    }
    return a;
  }

  // Farthest-first: greedy seeds maximizing kernel distance to the chosen
  // set, then nearest-seed assignment. The shift-free diagonal keeps
  // dist(i, i) at zero.
  Matrix eff = kernel.entries;
  eff.diagonal().array() -= kernel.diagonal_shift;
  auto dist2 = [&](int i, int j) { return eff(i, i) + eff(j, j) - 2.0 * eff(i, j); };
  std::vector<int> seeds;
  seeds.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
  std::vector<char> is_seed(static_cast<std::size_t>(n), 0);
  is_seed[static_cast<std::size_t>(seeds[0])] = 1;
  std::vector<double> min_d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) min_d[static_cast<std::size_t>(i)] = dist2(i, seeds[0]);
  while (static_cast<int>(seeds.size()) < k) {
    int far = -1;
    for (int i = 0; i < n; ++i) {
      if (is_seed[static_cast<std::size_t>(i)]) continue;
      if (far < 0 || min_d[static_cast<std::size_t>(i)] > min_d[static_cast<std::size_t>(far)]) {
        far = i;
      }
    }
    seeds.push_back(far);
    is_seed[static_cast<std::size_t>(far)] = 1;
    for (int i = 0; i < n; ++i) {
      min_d[static_cast<std::size_t>(i)] = std::min(min_d[static_cast<std::size_t>(i)], dist2(i, far));
    }
  }
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_d = dist2(i, seeds[0]);
    for (int s = 1; s < k; ++s) {
      const double d = dist2(i, seeds[static_cast<std::size_t>(s)]);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    a.labels[static_cast<std::size_t>(i)] = best;
  }
  return a;
}

/// Batch kernel k-means from an explicit starting assignment. Must
/// components move as units; a move that would violate a cannot pair is
/// skipped for the next-best cluster.
inline SolveResult kernel_kmeans_from(const KernelMatrix& kernel, int k, const LinkSet* links,
                                      const Assignment& init, const SolveOptions& opts = {}) {
  detail::KernelKMeansState state(kernel, k, links, opts);
  return state.run(init);
}

inline SolveResult kernel_kmeans(const KernelMatrix& kernel, int k, const LinkSet* links,
                                 std::uint64_t seed, const SolveOptions& opts = {}) {
  return kernel_kmeans_from(kernel, k, links, init_assignment(kernel, k, seed, opts.init), opts);
}

}  // namespace cocluster
