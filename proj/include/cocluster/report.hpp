#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocluster/cocluster.hpp"
#include "cocluster/synthetic.hpp"

namespace cocluster {

inline const char* sigma_policy_name(SigmaPolicy p) {
  switch (p) {
    case SigmaPolicy::Gershgorin: return "gershgorin";
    case SigmaPolicy::Exact: return "exact";
    case SigmaPolicy::Fixed: return "fixed";
  }
  return "?";
}

inline SigmaPolicy parse_sigma_policy(const std::string& s) {
  if (s == "gershgorin") return SigmaPolicy::Gershgorin;
  if (s == "exact") return SigmaPolicy::Exact;
  if (s == "fixed") return SigmaPolicy::Fixed;
  throw std::invalid_argument("unknown sigma policy: " + s);
}

inline const char* init_strategy_name(InitStrategy s) {
  return s == InitStrategy::Random ? "random" : "farthest_first";
}

inline InitStrategy parse_init_strategy(const std::string& s) {
  if (s == "random") return InitStrategy::Random;
  if (s == "farthest_first") return InitStrategy::FarthestFirst;
  throw std::invalid_argument("unknown init strategy: " + s);
}

inline nlohmann::json to_json(const CoClusterConfig& c) {
  nlohmann::json j;
  j["k_f"] = c.k_f;
  j["k_l"] = c.k_l;
  j["beta"] = c.beta;
  if (c.w) j["w"] = *c.w;
  j["sigma_policy"] = sigma_policy_name(c.sigma_policy);
  j["sigma_fixed"] = c.sigma_fixed;
  j["seed"] = c.seed;
  j["outer_max"] = c.outer_max;
  j["outer_tol"] = c.outer_tol;
  j["time_bandwidth_s"] = c.time_bandwidth_s;
  j["teleport_window_s"] = c.teleport_window_s;
  j["teleport_threshold_km"] = c.teleport_threshold_km;
  j["inner_max_iter"] = c.inner.max_iter;
  j["inner_tol"] = c.inner.tol;
  j["init"] = init_strategy_name(c.inner.init);
  j["hard_links"] = c.inner.hard;
  j["freeze_coupling"] = c.freeze_coupling;
  j["freeze_p_and_links"] = c.freeze_p_and_links;
  if (!c.dump_dir.empty()) j["dump_dir"] = c.dump_dir;
  return j;
}

inline CoClusterConfig cocluster_config_from_json(const nlohmann::json& j) {
  CoClusterConfig c;
  c.k_f = j.at("k_f").get<int>();
  c.k_l = j.at("k_l").get<int>();
  c.beta = j.at("beta").get<double>();
  if (j.contains("w")) c.w = j.at("w").get<double>();
  c.sigma_policy = parse_sigma_policy(j.at("sigma_policy").get<std::string>());
  c.sigma_fixed = j.at("sigma_fixed").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.outer_max = j.at("outer_max").get<int>();
  c.outer_tol = j.at("outer_tol").get<double>();
  c.time_bandwidth_s = j.at("time_bandwidth_s").get<double>();
  c.teleport_window_s = j.at("teleport_window_s").get<std::int64_t>();
  c.teleport_threshold_km = j.at("teleport_threshold_km").get<double>();
  c.inner.max_iter = j.at("inner_max_iter").get<int>();
  c.inner.tol = j.at("inner_tol").get<double>();
  c.inner.init = parse_init_strategy(j.at("init").get<std::string>());
  c.inner.hard = j.at("hard_links").get<bool>();
  c.freeze_coupling = j.at("freeze_coupling").get<bool>();
  c.freeze_p_and_links = j.at("freeze_p_and_links").get<bool>();
  if (j.contains("dump_dir")) c.dump_dir = j.at("dump_dir").get<std::string>();
  return c;
}

inline nlohmann::json to_json(const SyntheticConfig& c) {
  nlohmann::json j;
  j["k_f"] = c.k_f;
  j["k_l"] = c.k_l;
  j["faces_per_cluster"] = c.faces_per_cluster;
  j["locations_per_cluster"] = c.locations_per_cluster;
  j["face_dim"] = c.face_dim;
  j["location_dim"] = c.location_dim;
  j["separation"] = c.separation;
  j["noise"] = c.noise;
  j["cooccurrence_strength"] = c.cooccurrence_strength;
  j["public_fraction"] = c.public_fraction;
  j["burst_images"] = c.burst_images;
  j["burst_gap_s"] = c.burst_gap_s;
  j["burst_step_s"] = c.burst_step_s;
  j["verified_pairs_per_cluster"] = c.verified_pairs_per_cluster;
  j["with_geo"] = c.with_geo;
  return j;
}

inline SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  c.k_f = j.at("k_f").get<int>();
  c.k_l = j.at("k_l").get<int>();
  c.faces_per_cluster = j.at("faces_per_cluster").get<int>();
  c.locations_per_cluster = j.at("locations_per_cluster").get<int>();
  c.face_dim = j.at("face_dim").get<int>();
  c.location_dim = j.at("location_dim").get<int>();
  c.separation = j.at("separation").get<double>();
  c.noise = j.at("noise").get<double>();
  c.cooccurrence_strength = j.at("cooccurrence_strength").get<double>();
  c.public_fraction = j.at("public_fraction").get<double>();
  c.burst_images = j.at("burst_images").get<int>();
  c.burst_gap_s = j.at("burst_gap_s").get<std::int64_t>();
  c.burst_step_s = j.at("burst_step_s").get<std::int64_t>();
  c.verified_pairs_per_cluster = j.at("verified_pairs_per_cluster").get<int>();
  c.with_geo = j.at("with_geo").get<bool>();
  return c;
}

/// Result document: deliberately timestamp-free so identical runs serialize
/// byte-identically.
inline nlohmann::json result_to_json(const CoClusterResult& res, const CoClusterConfig& cfg,
                                     const std::string& method) {
  nlohmann::json j;
  j["method"] = method;
  j["config"] = to_json(cfg);
  j["rounds"] = res.rounds;
  if (res.faces.k > 0) {
    j["face_labels"] = res.faces.labels;
    j["k_f"] = res.faces.k;
  }
  if (res.locations.k > 0) {
    j["location_labels"] = res.locations.labels;
    j["k_l"] = res.locations.k;
  }
  if (res.p.diagonal.size() > 0) {
    std::vector<double> p(res.p.diagonal.data(), res.p.diagonal.data() + res.p.diagonal.size());
    j["p_diagonal"] = p;
  }
  j["joint_objective_trace"] = res.joint_objective_trace;
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& lc : res.link_counts) {
    counts.push_back({{"face_must", lc.face_must},
                      {"face_cannot", lc.face_cannot},
                      {"location_must", lc.location_must},
                      {"location_cannot", lc.location_cannot},
                      {"shared_person", lc.shared_person},
                      {"conflicts", lc.conflicts}});
  }
  j["link_counts"] = counts;
  nlohmann::json inner = nlohmann::json::array();
  for (std::size_t i = 0; i < res.inner_traces.size(); ++i) {
    inner.push_back({{"name", res.inner_trace_names[i]}, {"trace", res.inner_traces[i]}});
  }
  j["inner_traces"] = inner;
  return j;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Every command drops one of these next to its outputs; `created_utc` is
/// the only field allowed to differ between reproducing runs.
inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const nlohmann::json& config, std::uint64_t seed,
                           const nlohmann::json& inputs, const nlohmann::json& outputs) {
  nlohmann::json j;
  j["artifact_version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["created_utc"] = utc_timestamp();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace cocluster
