#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocluster/assignment.hpp"
#include "cocluster/dataset.hpp"
#include "cocluster/kernel.hpp"
#include "cocluster/kkmeans.hpp"
#include "cocluster/links.hpp"

namespace cocluster {

struct CoClusterConfig {
  int k_f = 2;
  int k_l = 2;
  double beta = 1.0;                  // strength of the cross-domain terms
  std::optional<double> w;            // link penalty; default 2*max|A| per domain
  SigmaPolicy sigma_policy = SigmaPolicy::Gershgorin;
  double sigma_fixed = 0.0;
  std::uint64_t seed = 0;
  int outer_max = 20;
  double outer_tol = 1e-5;
  double time_bandwidth_s = 3600.0;
  std::int64_t teleport_window_s = 3600;
  double teleport_threshold_km = 100.0;
  SolveOptions inner;
  bool freeze_coupling = false;   // drop all cross-domain terms (tests, baselines)
  bool freeze_p_and_links = false;  // pin P and runtime links at round-0 values (tests)
  std::string dump_dir;           // when set, assembled kernels land here as .bin files
};

inline void validate(const CoClusterConfig& c) {
  if (c.k_f < 2 || c.k_l < 2) throw std::invalid_argument("co-clustering needs k_f, k_l >= 2");
  if (c.beta < 0) throw std::invalid_argument("beta must be nonnegative");
  if (c.w && !(*c.w > 0)) throw std::invalid_argument("link weight w must be positive");
  if (!(c.outer_tol > 0) || !(c.inner.tol >= 0)) throw std::invalid_argument("tolerances must be positive");
  if (c.outer_max < 0 || c.inner.max_iter < 0) throw std::invalid_argument("iteration caps must be nonnegative");
  if (!(c.time_bandwidth_s > 0)) throw std::invalid_argument("time bandwidth must be positive");
}

struct LinkCounts {
  int face_must = 0;
  int face_cannot = 0;
  int location_must = 0;
  int location_cannot = 0;
  int shared_person = 0;  // raw shared-person must pairs from the face clustering
  int conflicts = 0;      // cannot pairs dropped during resolution
};

struct JointObjective {
  double f_f = 0.0;
  double f_l = 0.0;
  double f_fl = 0.0;
  double f_lf = 0.0;
  double total = 0.0;
};

struct CoClusterResult {
  Assignment faces;
  Assignment locations;
  PrivateWeights p;
  std::vector<double> joint_objective_trace;  // one entry per round, incl. round 0
  std::vector<JointObjective> joint_components;
  std::vector<LinkCounts> link_counts;        // same indexing as the trace
  int rounds = 0;                             // coupled rounds actually run
  std::vector<std::vector<double>> inner_traces;  // solver traces in execution order
  std::vector<std::string> inner_trace_names;
};

/// Pairwise squared Euclidean distances recovered from the Gram matrix.
inline Matrix squared_distance_matrix(const AffinityMatrix& a) {
  const Vector d = a.entries.diagonal();
  Matrix e = d.replicate(1, a.entries.rows());
  e += d.transpose().replicate(a.entries.rows(), 1);
  e -= 2.0 * a.entries;
  return e;
}

/// Constraint overrides for the objective: must pairs at distance zero,
/// cannot pairs at ten times the largest unconstrained distance (a finite
/// stand-in that preserves ordering).
inline Matrix apply_link_overrides(Matrix e, const LinkSet& links) {
  const double big = 10.0 * e.maxCoeff();
  for (const auto& [i, j] : links.must) {
    e(i, j) = 0.0;
    e(j, i) = 0.0;
  }
  for (const auto& [i, j] : links.cannot) {
    e(i, j) = big;
    e(j, i) = big;
  }
  return e;
}

/// Evaluates all four terms of the coupled objective:
/// f_F + f_L - f_FL - f_LF.
inline JointObjective joint_objective(const Matrix& e_f, const Matrix& e_l,
                                      const IndicatorMatrix& z_f, const IndicatorMatrix& z_l,
                                      const CooccurrenceMatrix& cooc, const TimeGroups& groups,
                                      const PrivateWeights& p) {
  const Eigen::Index nf = z_f.entries.rows();
  const Eigen::Index nl = z_l.entries.rows();
  if (e_f.rows() != nf || e_f.cols() != nf || e_l.rows() != nl || e_l.cols() != nl ||
      cooc.entries.rows() != nl || cooc.entries.cols() != nf || p.diagonal.size() != nl) {
    throw std::invalid_argument("joint objective: dimensions disagree");
  }
  JointObjective out;
  out.f_f = (z_f.entries.transpose() * e_f * z_f.entries).trace();
  out.f_l = (z_l.entries.transpose() * e_l * z_l.entries).trace();
  const Matrix cz_f = cooc.entries * z_f.entries;  // N_L x k_F
  for (const auto& group : groups.location_indices) {
    if (group.empty()) continue;
    Matrix m = Matrix::Zero(z_f.entries.cols(), z_l.entries.cols());
    for (int l : group) {
      m += cz_f.row(l).transpose() * z_l.entries.row(l);
    }
    out.f_fl += m.squaredNorm();
  }
  const Matrix n = cz_f.transpose() * (p.diagonal.asDiagonal() * z_l.entries);
  out.f_lf = n.squaredNorm();
  out.total = out.f_f + out.f_l - out.f_fl - out.f_lf;
  return out;
}

namespace detail {

struct DomainContext {
  AffinityMatrix a;
  Matrix e_base;  // unconstrained squared distances
  double w = 0.0;
};

inline DomainContext make_domain_context(const Matrix& features, std::optional<double> w) {
  DomainContext ctx;
  ctx.a = affinity(features);
  ctx.e_base = squared_distance_matrix(ctx.a);
  ctx.w = w ? *w : 2.0 * ctx.a.entries.cwiseAbs().maxCoeff();
  if (!(ctx.w > 0)) ctx.w = 1.0;  // all-zero affinity corner
  return ctx;
}

inline KernelMatrix build_kernel(const DomainContext& ctx, const LinkSet& links,
                                 const Matrix& cross_sum, const Matrix& q,
                                 const CoClusterConfig& cfg) {
  const int n = static_cast<int>(ctx.a.entries.rows());
  const ConstraintWeightMatrix wl = constraint_weights(links, ctx.w, n);
  KernelMatrix base = assemble_kernel(ctx.a, wl, cross_sum, q, cfg.beta, 0.0);
  const double sigma = resolve_sigma(base.entries, cfg.sigma_policy, cfg.sigma_fixed);
  base.entries.diagonal().array() += sigma;
  base.diagonal_shift = sigma;
  return base;
}

// Must links are heuristics and can merge a domain below k components, in
// which case hard enforcement is infeasible; that solve falls back to the
// penalty terms already in the kernel.
inline SolveOptions feasible_inner(const SolveOptions& inner, const LinkSet& links, int n, int k,
                                   const char* what) {
  SolveOptions opts = inner;
  if (!opts.hard) return opts;
  const ComponentStructure cs = build_components(&links, n);
  if (cs.count() < k) {
    opts.hard = false;
    std::cerr << "note: " << what << ": must links leave " << cs.count()
              << " components for k=" << k << "; treating links as penalties for this solve\n";
  }
  return opts;
}

}  // namespace detail

/// Alternating optimization: independent kernel k-means per domain first,
/// then rounds of P refresh, runtime link refresh, and one coupled solve per
/// domain, until the joint objective stabilizes.
inline CoClusterResult cocluster(const Dataset& ds, const CoClusterConfig& cfg) {
  validate(cfg);
  validate(ds);
  const int nf = ds.num_faces();
  const int nl = ds.num_locations();
  if (cfg.k_f > nf) throw std::invalid_argument("k_f exceeds the number of face patches");
  if (cfg.k_l > nl) throw std::invalid_argument("k_l exceeds the number of location patches");

  const CooccurrenceMatrix cooc = build_cooccurrence(ds);
  const TimeGroups groups = build_time_groups(ds, cfg.time_bandwidth_s);

  const detail::DomainContext face_ctx = detail::make_domain_context(ds.face_features, cfg.w);
  const detail::DomainContext loc_ctx = detail::make_domain_context(ds.location_features, cfg.w);

  // Within-domain links need no clustering and stay fixed across rounds.
  LinkSet face_raw = cannot_links_faces_same_image(ds);
  face_raw = merge_links(face_raw, cannot_links_faces_teleport(ds, cfg.teleport_window_s,
                                                               cfg.teleport_threshold_km));
  const ResolvedLinks face_links = resolve_links(face_raw);
  LinkSet loc_raw = merge_links(must_links_locations_same_image(ds),
                                must_links_locations_verified(ds));
  const ResolvedLinks loc_links_base = resolve_links(loc_raw);

  const Matrix zero_f = Matrix::Zero(nf, nf);
  const Matrix zero_l = Matrix::Zero(nl, nl);
  const Matrix e_f = apply_link_overrides(face_ctx.e_base, face_links.links);

  CoClusterResult res;
  auto record_inner = [&](const std::string& name, const SolveResult& sr) {
    res.inner_traces.push_back(sr.objective_trace);
    res.inner_trace_names.push_back(name);
  };

  auto dump_kernel = [&](const KernelMatrix& k, const std::string& name) {
    if (cfg.dump_dir.empty()) return;
    std::filesystem::create_directories(cfg.dump_dir);
    dump_matrix(std::filesystem::path(cfg.dump_dir) / (name + ".bin"), k.entries);
  };

  // Round 0: standard kernel k-means per domain, within-domain links only.
  const KernelMatrix k_f0 = detail::build_kernel(face_ctx, face_links.links, zero_f, zero_f, cfg);
  const KernelMatrix k_l0 = detail::build_kernel(loc_ctx, loc_links_base.links, zero_l, zero_l, cfg);
  dump_kernel(k_f0, "k_face_round0");
  dump_kernel(k_l0, "k_location_round0");
  SolveResult face_solve =
      kernel_kmeans(k_f0, cfg.k_f, &face_links.links, substream_seed(cfg.seed, "round0/face"),
                    detail::feasible_inner(cfg.inner, face_links.links, nf, cfg.k_f, "face round 0"));
  record_inner("round0/face", face_solve);
  SolveResult loc_solve =
      kernel_kmeans(k_l0, cfg.k_l, &loc_links_base.links,
                    substream_seed(cfg.seed, "round0/location"),
                    detail::feasible_inner(cfg.inner, loc_links_base.links, nl, cfg.k_l,
                                           "location round 0"));
  record_inner("round0/location", loc_solve);
  Assignment faces = face_solve.assignment;
  Assignment locations = loc_solve.assignment;

  // End-of-round bookkeeping: P, runtime links and the objective, all from
  // the assignments the next round will consume.
  PrivateWeights p{Vector::Ones(nl)};
  LinkSet shared;
  ResolvedLinks loc_links = loc_links_base;
  auto close_round = [&]() {
    p = private_weights(faces, locations, cooc, cfg.k_f);
    shared = cfg.freeze_coupling ? LinkSet{Domain::Location, {}, {}}
                                 : must_links_locations_shared_person(ds, faces, groups);
    loc_links = resolve_links(merge_links(loc_raw, shared));
    LinkCounts counts;
    counts.face_must = static_cast<int>(face_links.links.must.size());
    counts.face_cannot = static_cast<int>(face_links.links.cannot.size());
    counts.location_must = static_cast<int>(loc_links.links.must.size());
    counts.location_cannot = static_cast<int>(loc_links.links.cannot.size());
    counts.shared_person = static_cast<int>(shared.must.size());
    counts.conflicts = face_links.conflicts + loc_links.conflicts;
    res.link_counts.push_back(counts);

    const IndicatorMatrix z_f = indicator_matrix(faces);
    const IndicatorMatrix z_l = indicator_matrix(locations);
    const Matrix e_l = apply_link_overrides(loc_ctx.e_base, loc_links.links);
    JointObjective obj = joint_objective(e_f, e_l, z_f, z_l, cooc, groups, p);
    if (cfg.freeze_coupling) {
      obj.f_fl = 0.0;
      obj.f_lf = 0.0;
      obj.total = obj.f_f + obj.f_l;
    }
    res.joint_objective_trace.push_back(obj.total);
    res.joint_components.push_back(obj);
  };
  close_round();

  PrivateWeights p_kernel = p;          // values driving the next kernels
  ResolvedLinks loc_links_kernel = loc_links;
  const bool frozen = cfg.freeze_p_and_links;

  for (int round = 1; round <= cfg.outer_max; ++round) {
    const PrivateWeights& p_in = frozen ? p_kernel : p;
    const ResolvedLinks& links_in = frozen ? loc_links_kernel : loc_links;

    Matrix cross_sum_l = zero_l;
    Matrix q_l = zero_l;
    if (!cfg.freeze_coupling) {
      const CrossTerms ct = cross_terms_location(cooc, groups, p_in, indicator_matrix(faces));
      cross_sum_l = ct.w_sum;
      q_l = ct.q;
    }
    const KernelMatrix k_l = detail::build_kernel(loc_ctx, links_in.links, cross_sum_l, q_l, cfg);
    dump_kernel(k_l, "k_location_round" + std::to_string(round));
    loc_solve = kernel_kmeans_from(
        k_l, cfg.k_l, &links_in.links, locations,
        detail::feasible_inner(cfg.inner, links_in.links, nl, cfg.k_l, "location solve"));
    record_inner("round" + std::to_string(round) + "/location", loc_solve);
    locations = loc_solve.assignment;

    Matrix cross_sum_f = zero_f;
    Matrix q_f = zero_f;
    if (!cfg.freeze_coupling) {
      const CrossTerms ct = cross_terms_face(cooc, groups, p_in, indicator_matrix(locations));
      cross_sum_f = ct.w_sum;
      q_f = ct.q;
    }
    const KernelMatrix k_f = detail::build_kernel(face_ctx, face_links.links, cross_sum_f, q_f, cfg);
    dump_kernel(k_f, "k_face_round" + std::to_string(round));
    face_solve = kernel_kmeans_from(
        k_f, cfg.k_f, &face_links.links, faces,
        detail::feasible_inner(cfg.inner, face_links.links, nf, cfg.k_f, "face solve"));
    record_inner("round" + std::to_string(round) + "/face", face_solve);
    faces = face_solve.assignment;

    close_round();
    res.rounds = round;
    const double cur = res.joint_objective_trace.back();
    const double prev = res.joint_objective_trace[res.joint_objective_trace.size() - 2];
    if (std::abs(cur - prev) < cfg.outer_tol * std::max(std::abs(cur), 1e-12)) break;
  }

  res.faces = std::move(faces);
  res.locations = std::move(locations);
  res.p = p;  // recomputed from the returned assignments in close_round
  return res;
}

}  // namespace cocluster
