#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocluster/assignment.hpp"
#include "cocluster/dataset.hpp"
#include "cocluster/links.hpp"

namespace cocluster {

/// Gram matrix of inner products between feature rows.
struct AffinityMatrix {
  Matrix entries;
};

/// +w at must pairs, -w at cannot pairs, zero elsewhere (and on the
/// diagonal).
struct ConstraintWeightMatrix {
  Matrix entries;
};

/// Diagonal location weights: 1 where a single face cluster visits, falling
/// to 0 where all of them do.
struct PrivateWeights {
  Vector diagonal;  // N_L entries in [0,1]
};

/// Symmetric similarity matrix handed to the solver. `diagonal_shift`
/// records how much of the diagonal is regularization rather than data; the
/// assignment rule discounts it, which keeps cluster assignments invariant
/// to the shift.
struct KernelMatrix {
  Matrix entries;
  double diagonal_shift = 0.0;
};

inline AffinityMatrix affinity(const Matrix& features) {
  if (features.rows() == 0) throw std::invalid_argument("affinity of an empty feature set");
  Matrix a = features * features.transpose();
  // Symmetrize away accumulation-order rounding.
  a = ((a + a.transpose()) * 0.5).eval();
  return AffinityMatrix{std::move(a)};
}

inline ConstraintWeightMatrix constraint_weights(const LinkSet& links, double w, int n) {
  if (!(w > 0)) throw std::invalid_argument("constraint weight must be positive");
  Matrix m = Matrix::Zero(n, n);
  for (const auto& [a, b] : links.must) {
    m(a, b) = w;
    m(b, a) = w;
  }
  for (const auto& [a, b] : links.cannot) {
    m(a, b) = -w;
    m(b, a) = -w;
  }
  return ConstraintWeightMatrix{std::move(m)};
}

/// Weight log(k_F / N_F_L) / log(k_F) per location patch, where N_F_L counts
/// the distinct face clusters seen at the patch's location cluster.
/// Locations with no co-occurring face count as N=1: they carry no people
/// evidence and their coupling rows vanish anyway.
inline PrivateWeights private_weights(const Assignment& faces, const Assignment& locations,
                                      const CooccurrenceMatrix& cooc, int k_f) {
  if (k_f < 2) throw std::invalid_argument("private weights need k_f >= 2");
  const int nl = static_cast<int>(cooc.entries.rows());
  const int nf = static_cast<int>(cooc.entries.cols());
  if (faces.size() != nf) throw std::invalid_argument("face assignment size mismatch");
  if (locations.size() != nl) throw std::invalid_argument("location assignment size mismatch");

  std::vector<std::set<int>> clusters_at(static_cast<std::size_t>(locations.k));
  for (int l = 0; l < nl; ++l) {
    const int lc = locations.labels[static_cast<std::size_t>(l)];
    for (int f = 0; f < nf; ++f) {
      if (cooc.entries(l, f) != 0.0) {
        clusters_at[static_cast<std::size_t>(lc)].insert(faces.labels[static_cast<std::size_t>(f)]);
      }
    }
  }
  Vector p(nl);
  const double log_kf = std::log(static_cast<double>(k_f));
  for (int l = 0; l < nl; ++l) {
    const int lc = locations.labels[static_cast<std::size_t>(l)];
    const auto count = std::max<std::size_t>(1, clusters_at[static_cast<std::size_t>(lc)].size());
    p[l] = std::log(static_cast<double>(k_f) / static_cast<double>(count)) / log_kf;
  }
  return PrivateWeights{std::move(p)};
}

struct CrossTerms {
  Matrix w_sum;  // sum over time groups of the windowed coupling terms
  Matrix q;      // privacy-weighted coupling term
};

namespace detail {

inline void check_cross_dims(const CooccurrenceMatrix& cooc, const PrivateWeights& p,
                             const Matrix& z, int z_rows, const char* what) {
  if (p.diagonal.size() != cooc.entries.rows()) {
    throw std::invalid_argument("private weight diagonal does not match location count");
  }
  if (z.rows() != z_rows) {
    throw std::invalid_argument(std::string("indicator matrix rows do not match ") + what +
                                " count");
  }
}

// Accumulates sum_i (rows_i of b) gram, scattered back to full size.
inline Matrix masked_gram_sum(const Matrix& b, const std::vector<std::vector<int>>& groups) {
  Matrix out = Matrix::Zero(b.rows(), b.rows());
  for (const auto& group : groups) {
    const int g = static_cast<int>(group.size());
    if (g == 0) continue;
    Matrix sub(g, b.cols());
    for (int r = 0; r < g; ++r) sub.row(r) = b.row(group[static_cast<std::size_t>(r)]);
    Matrix gram = sub * sub.transpose();
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        out(group[static_cast<std::size_t>(r)], group[static_cast<std::size_t>(c)]) += gram(r, c);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Location-domain coupling: W_sum accumulates, per time group, the gram of
/// the face-cluster profile restricted to that group's locations; Q is the
/// same gram with privacy weights in place of the time window.
inline CrossTerms cross_terms_location(const CooccurrenceMatrix& cooc, const TimeGroups& groups,
                                       const PrivateWeights& p, const IndicatorMatrix& z_f) {
  detail::check_cross_dims(cooc, p, z_f.entries, static_cast<int>(cooc.entries.cols()), "face");
  const Matrix b = cooc.entries * z_f.entries;  // N_L x k_F
  CrossTerms out;
  out.w_sum = detail::masked_gram_sum(b, groups.location_indices);
  const Matrix pb = p.diagonal.asDiagonal() * b;
  out.q = pb * pb.transpose();
  return out;
}

/// Face-domain mirror of cross_terms_location.
inline CrossTerms cross_terms_face(const CooccurrenceMatrix& cooc, const TimeGroups& groups,
                                   const PrivateWeights& p, const IndicatorMatrix& z_l) {
  detail::check_cross_dims(cooc, p, z_l.entries, static_cast<int>(cooc.entries.rows()),
                           "location");
  const int nf = static_cast<int>(cooc.entries.cols());
  CrossTerms out;
  out.w_sum = Matrix::Zero(nf, nf);
  for (const auto& group : groups.location_indices) {
    if (group.empty()) continue;
    Matrix u = Matrix::Zero(nf, z_l.entries.cols());  // C_FL^T (T_i Z_L)
    for (int l : group) {
      u += cooc.entries.row(l).transpose() * z_l.entries.row(l);
    }
    out.w_sum += u * u.transpose();
  }
  const Matrix v = cooc.entries.transpose() * (p.diagonal.asDiagonal() * z_l.entries);
  out.q = v * v.transpose();
  return out;
}

/// K = 2A + W_links + beta (W_sum + Q) + sigma I.
inline KernelMatrix assemble_kernel(const AffinityMatrix& a, const ConstraintWeightMatrix& w_links,
                                    const Matrix& cross_sum, const Matrix& q, double beta,
                                    double sigma) {
  const Eigen::Index n = a.entries.rows();
  if (a.entries.cols() != n || w_links.entries.rows() != n || w_links.entries.cols() != n ||
      cross_sum.rows() != n || cross_sum.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("kernel assembly: matrix sizes disagree");
  }
  if (beta < 0 || sigma < 0) throw std::invalid_argument("beta and sigma must be nonnegative");
  KernelMatrix k;
  k.entries = 2.0 * a.entries + w_links.entries + beta * (cross_sum + q);
  k.entries.diagonal().array() += sigma;
  k.diagonal_shift = sigma;
  return k;
}

enum class SigmaPolicy { Gershgorin, Exact, Fixed };

/// Shift needed to certify positive semidefiniteness of `base`.
/// Gershgorin uses the disc bound; Exact solves the eigenproblem.
inline double resolve_sigma(const Matrix& base, SigmaPolicy policy, double fixed_value = 0.0) {
  switch (policy) {
    case SigmaPolicy::Fixed:
      if (fixed_value < 0) throw std::invalid_argument("fixed sigma must be nonnegative");
      return fixed_value;
    case SigmaPolicy::Gershgorin: {
      double lower = 0.0;
      for (Eigen::Index i = 0; i < base.rows(); ++i) {
        const double radius = base.row(i).cwiseAbs().sum() - std::abs(base(i, i));
        lower = std::min(lower, base(i, i) - radius);
      }
      return -lower;  // zero when the bound is already nonnegative
    }
    case SigmaPolicy::Exact: {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(base, Eigen::EigenvaluesOnly);
      return std::max(0.0, -eig.eigenvalues().minCoeff());
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Debug dump: u64 little-endian size header, then row-major f64 entries.
// ---------------------------------------------------------------------------

inline void dump_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("dump_matrix expects a square matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::uint64_t n = static_cast<std::uint64_t>(m.rows());
  char header[8];
  for (int i = 0; i < 8; ++i) header[i] = static_cast<char>((n >> (8 * i)) & 0xff);
  out.write(header, 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
}

inline Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char header[8];
  in.read(header, 8);
  if (in.gcount() != 8) throw std::runtime_error(path.string() + ": truncated header");
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(static_cast<unsigned char>(header[i])) << (8 * i);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!in) throw std::runtime_error(path.string() + ": truncated payload");
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace cocluster
