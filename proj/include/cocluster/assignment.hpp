#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cocluster/common.hpp"

namespace cocluster {

/// Cluster labels for one domain; labels lie in [0, k).
struct Assignment {
  std::vector<int> labels;
  int k = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

inline void validate(const Assignment& a) {
  if (a.k < 1) throw std::invalid_argument("assignment needs k >= 1");
  for (int v : a.labels) {
    if (v < 0 || v >= a.k) {
      throw std::invalid_argument("label " + std::to_string(v) + " outside [0," +
                                  std::to_string(a.k) + ")");
    }
  }
}

/// Orthonormal cluster-membership matrix: column c is the indicator of
/// cluster c scaled by 1/sqrt(cluster size), so entries' columns are
/// orthonormal and each row has exactly one nonzero.
struct IndicatorMatrix {
  Matrix entries;  // N x k
};

inline IndicatorMatrix indicator_matrix(const Assignment& a) {
  validate(a);
  const int n = a.size();
  std::vector<int> sizes(static_cast<std::size_t>(a.k), 0);
  for (int v : a.labels) ++sizes[static_cast<std::size_t>(v)];
  for (int c = 0; c < a.k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] == 0) {
      throw std::invalid_argument("cluster " + std::to_string(c) + " is empty");
    }
  }
  Matrix z = Matrix::Zero(n, a.k);
  for (int i = 0; i < n; ++i) {
    const int c = a.labels[static_cast<std::size_t>(i)];
    z(i, c) = 1.0 / std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(c)]));
  }
  return IndicatorMatrix{std::move(z)};
}

}  // namespace cocluster
