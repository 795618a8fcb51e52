// Test-only reference implementations, kept deliberately naive and
// independent of the library's computation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "cocluster/common.hpp"
#include "cocluster/links.hpp"

namespace oracle {

using cocluster::Matrix;
using cocluster::Vector;

// O(n^2) pair enumeration RandIndex.
inline double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  long long agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_a = a[i] == a[j];
      const bool same_b = b[i] == b[j];
      agree += (same_a == same_b) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

// Triple matrix products with explicit index loops.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  }
  return c;
}

inline Matrix diag_from_indices(int n, const std::vector<int>& idx) {
  Matrix t = Matrix::Zero(n, n);
  for (int i : idx) t(i, i) = 1.0;
  return t;
}

// W_sum = sum_i T_i C Z Z^T C^T T_i, Q = P C Z Z^T C^T P (location domain).
inline std::pair<Matrix, Matrix> cross_terms_location(const Matrix& cooc,
                                                      const std::vector<std::vector<int>>& groups,
                                                      const Vector& p, const Matrix& z_f) {
  const int nl = static_cast<int>(cooc.rows());
  Matrix zzt = matmul(z_f, z_f.transpose());
  Matrix core = matmul(matmul(cooc, zzt), cooc.transpose());  // N_L x N_L
  Matrix w_sum = Matrix::Zero(nl, nl);
  for (const auto& g : groups) {
    Matrix t = diag_from_indices(nl, g);
    w_sum += matmul(matmul(t.transpose(), core), t);
  }
  Matrix pd = Matrix::Zero(nl, nl);
  for (int i = 0; i < nl; ++i) pd(i, i) = p[i];
  Matrix q = matmul(matmul(pd.transpose(), core), pd);
  return {w_sum, q};
}

// W_sum = sum_i C^T T_i Z Z^T T_i^T C, Q = C^T P Z Z^T P^T C (face domain).
inline std::pair<Matrix, Matrix> cross_terms_face(const Matrix& cooc,
                                                  const std::vector<std::vector<int>>& groups,
                                                  const Vector& p, const Matrix& z_l) {
  const int nl = static_cast<int>(cooc.rows());
  const int nf = static_cast<int>(cooc.cols());
  Matrix zzt = matmul(z_l, z_l.transpose());
  Matrix w_sum = Matrix::Zero(nf, nf);
  for (const auto& g : groups) {
    Matrix t = diag_from_indices(nl, g);
    Matrix m = matmul(matmul(matmul(matmul(cooc.transpose(), t), zzt), t.transpose()), cooc);
    w_sum += m;
  }
  Matrix pd = Matrix::Zero(nl, nl);
  for (int i = 0; i < nl; ++i) pd(i, i) = p[i];
  Matrix q = matmul(matmul(matmul(matmul(cooc.transpose(), pd), zzt), pd.transpose()), cooc);
  return {w_sum, q};
}

// Within-cluster sum of squared Euclidean distances for a labeling.
inline double sse(const Matrix& x, const std::vector<int>& labels, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    Vector mean = Vector::Zero(x.cols());
    int count = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] == c) {
        mean += x.row(i).transpose();
        ++count;
      }
    }
    if (count == 0) continue;
    mean /= count;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] == c) {
        total += (x.row(i).transpose() - mean).squaredNorm();
      }
    }
  }
  return total;
}

// All k-labelings of n points with no empty cluster.
inline std::vector<std::vector<int>> all_partitions(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<int> used(static_cast<std::size_t>(k), 0);
    for (int v : labels) used[static_cast<std::size_t>(v)] = 1;
    if (std::all_of(used.begin(), used.end(), [](int u) { return u == 1; })) out.push_back(labels);
    int pos = n - 1;
    while (pos >= 0 && labels[static_cast<std::size_t>(pos)] == k - 1) {
      labels[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++labels[static_cast<std::size_t>(pos)];
  }
  return out;
}

inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  return rand_index(a, b) == 1.0;
}

// ---------------------------------------------------------------------------
// Naive replay of the hard-mode batch update rule: direct sums, no caching.
// Components and the commit/tie/repair rules follow the documented contract.
// ---------------------------------------------------------------------------

struct NaiveProblem {
  Matrix kernel;          // shifted entries
  double shift = 0.0;
  int k = 0;
  std::vector<std::vector<int>> comps;       // sorted members
  std::vector<std::set<int>> cannot_adj;     // component level
};

inline double naive_point_dist(const NaiveProblem& p, const std::vector<int>& point_labels, int i,
                               int c) {
  const int n = static_cast<int>(p.kernel.rows());
  auto eff = [&](int r, int s) {
    const double v = p.kernel(r, s);
    return r == s ? v - p.shift : v;
  };
  int count = 0;
  double cross = 0.0;
  for (int j = 0; j < n; ++j) {
    if (point_labels[static_cast<std::size_t>(j)] == c) {
      ++count;
      cross += eff(i, j);
    }
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  double self = 0.0;
  for (int j = 0; j < n; ++j) {
    if (point_labels[static_cast<std::size_t>(j)] != c) continue;
    for (int l = 0; l < n; ++l) {
      if (point_labels[static_cast<std::size_t>(l)] == c) self += eff(j, l);
    }
  }
  return eff(i, i) - 2.0 * cross / count + self / (static_cast<double>(count) * count);
}

inline double naive_objective(const NaiveProblem& p, const std::vector<int>& point_labels) {
  const int n = static_cast<int>(p.kernel.rows());
  double obj = 0.0;
  for (int c = 0; c < p.k; ++c) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < n; ++j) {
      if (point_labels[static_cast<std::size_t>(j)] != c) continue;
      ++count;
      for (int l = 0; l < n; ++l) {
        if (point_labels[static_cast<std::size_t>(l)] == c) sum += p.kernel(j, l);
      }
    }
    if (count > 0) obj += sum / count;
  }
  return obj;
}

struct NaiveResult {
  std::vector<int> labels;
  double objective = 0.0;
  int sweeps = 0;
};

inline NaiveResult naive_batch_kkmeans(const NaiveProblem& p, std::vector<int> comp_labels,
                                       int max_sweeps) {
  const int n_comp = static_cast<int>(p.comps.size());
  auto point_labels = [&]() {
    std::vector<int> out(static_cast<std::size_t>(p.kernel.rows()));
    for (int ci = 0; ci < n_comp; ++ci) {
      for (int i : p.comps[static_cast<std::size_t>(ci)]) {
        out[static_cast<std::size_t>(i)] = comp_labels[static_cast<std::size_t>(ci)];
      }
    }
    return out;
  };
  auto comp_dist = [&](const std::vector<int>& snapshot, int ci, int c) {
    double d = 0.0;
    for (int i : p.comps[static_cast<std::size_t>(ci)]) {
      d += naive_point_dist(p, snapshot, i, c);
    }
    return d;
  };
  auto repair = [&]() {
    while (true) {
      std::vector<int> count(static_cast<std::size_t>(p.k), 0);
      for (int ci = 0; ci < n_comp; ++ci) {
        ++count[static_cast<std::size_t>(comp_labels[static_cast<std::size_t>(ci)])];
      }
      int empty = -1;
      for (int c = 0; c < p.k; ++c) {
        if (count[static_cast<std::size_t>(c)] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) return;
      const auto snapshot = point_labels();
      int worst = -1;
      double worst_d = -std::numeric_limits<double>::infinity();
      for (int ci = 0; ci < n_comp; ++ci) {
        const int cur = comp_labels[static_cast<std::size_t>(ci)];
        if (count[static_cast<std::size_t>(cur)] < 2) continue;
        const double d = comp_dist(snapshot, ci, cur) /
                         static_cast<double>(p.comps[static_cast<std::size_t>(ci)].size());
        if (d > worst_d) {
          worst_d = d;
          worst = ci;
        }
      }
      if (worst < 0) return;
      comp_labels[static_cast<std::size_t>(worst)] = empty;
    }
  };

  NaiveResult res;
  std::vector<int> prev = point_labels();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const auto snapshot = point_labels();
    for (int ci = 0; ci < n_comp; ++ci) {
      std::vector<char> blocked(static_cast<std::size_t>(p.k), 0);
      for (int other : p.cannot_adj[static_cast<std::size_t>(ci)]) {
        blocked[static_cast<std::size_t>(comp_labels[static_cast<std::size_t>(other)])] = 1;
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < p.k; ++c) {
        if (blocked[static_cast<std::size_t>(c)]) continue;
        const double d = comp_dist(snapshot, ci, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best < 0) {
        for (int c = 0; c < p.k; ++c) {
          const double d = comp_dist(snapshot, ci, c);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      }
      comp_labels[static_cast<std::size_t>(ci)] = best;
    }
    repair();
    res.sweeps = sweep + 1;
    auto cur = point_labels();
    if (cur == prev) break;
    prev = std::move(cur);
  }
  res.labels = point_labels();
  res.objective = naive_objective(p, res.labels);
  return res;
}

}  // namespace oracle
