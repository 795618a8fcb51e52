// Command-line front end: generate / cluster / evaluate / sweep-k.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cocluster/cocluster.hpp"
#include "cocluster/evaluation.hpp"
#include "cocluster/report.hpp"
#include "cocluster/svg.hpp"
#include "cocluster/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("COCLUSTER_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads > 0) Eigen::setNbThreads(threads);
}

void write_trace_csv(const fs::path& path, const cocluster::CoClusterResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "round,f_f,f_l,f_fl,f_lf,total\n";
  for (std::size_t r = 0; r < res.joint_components.size(); ++r) {
    const auto& c = res.joint_components[r];
    out << r << ',' << cocluster::format_double(c.f_f) << ',' << cocluster::format_double(c.f_l)
        << ',' << cocluster::format_double(c.f_fl) << ',' << cocluster::format_double(c.f_lf)
        << ',' << cocluster::format_double(c.total) << '\n';
  }
}

void write_trace_csv(const fs::path& path, const std::vector<double>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << cocluster::format_double(trace[i]) << '\n';
  }
}

// --------------------------------------------------------------------------
// generate
// --------------------------------------------------------------------------

struct GenerateOpts {
  cocluster::SyntheticConfig cfg;
  std::uint64_t seed = 0;
  std::string out;
};

json to_json(const GenerateOpts& o) {
  json j = cocluster::to_json(o.cfg);
  j["out"] = o.out;
  return j;
}

GenerateOpts generate_opts_from_manifest(const json& m) {
  GenerateOpts o;
  o.cfg = cocluster::synthetic_config_from_json(m.at("config"));
  o.seed = m.at("seed").get<std::uint64_t>();
  o.out = m.at("config").at("out").get<std::string>();
  return o;
}

int cmd_generate(const GenerateOpts& opts) {
  auto [dataset, truth] = cocluster::generate_synthetic(opts.cfg, opts.seed);
  cocluster::save_dataset(opts.out, dataset, &truth);
  cocluster::write_manifest(fs::path(opts.out) / "manifest.json", "generate", to_json(opts),
                            opts.seed, json::object(),
                            json{{"bundle", opts.out}});
  std::cerr << "wrote bundle with " << dataset.num_faces() << " face and "
            << dataset.num_locations() << " location patches to " << opts.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// cluster
// --------------------------------------------------------------------------

struct ClusterOpts {
  cocluster::CoClusterConfig cfg;
  std::string in;
  std::string out;
  std::string method = "cocluster";
  std::string domain = "both";
};

json to_json(const ClusterOpts& o) {
  json j = cocluster::to_json(o.cfg);
  j["in"] = o.in;
  j["out"] = o.out;
  j["method"] = o.method;
  j["domain"] = o.domain;
  return j;
}

ClusterOpts cluster_opts_from_manifest(const json& m) {
  ClusterOpts o;
  o.cfg = cocluster::cocluster_config_from_json(m.at("config"));
  o.in = m.at("config").at("in").get<std::string>();
  o.out = m.at("config").at("out").get<std::string>();
  o.method = m.at("config").at("method").get<std::string>();
  o.domain = m.at("config").at("domain").get<std::string>();
  return o;
}

int cmd_cluster(const ClusterOpts& opts) {
  const cocluster::Dataset ds = cocluster::load_dataset(opts.in);
  fs::create_directories(opts.out);
  const fs::path out(opts.out);

  if (opts.method == "cocluster") {
    const cocluster::CoClusterResult res = cocluster::cocluster(ds, opts.cfg);
    const json result = cocluster::result_to_json(res, opts.cfg, opts.method);
    std::ofstream rj(out / "result.json", std::ios::binary);
    rj << result.dump(2) << '\n';
    write_trace_csv(out / "trace.csv", res);
    int violations = 0;
    for (const auto& lc : res.link_counts) violations += lc.conflicts;
    if (violations > 0) {
      std::cerr << "warning: " << violations << " cannot links conflicted with must links and were dropped\n";
    }
  } else {
    const auto parsed = cocluster::parse_baseline(opts.method);
    if (!parsed) throw CLI::ValidationError("--method", "unknown method: " + opts.method);
    std::vector<cocluster::Domain> domains;
    if (opts.domain == "face") {
      domains = {cocluster::Domain::Face};
    } else if (opts.domain == "location") {
      domains = {cocluster::Domain::Location};
    } else if (opts.domain == "both") {
      domains = {cocluster::Domain::Face, cocluster::Domain::Location};
    } else {
      throw CLI::ValidationError("--domain", "must be face, location or both");
    }
    cocluster::CoClusterResult res;
    std::vector<double> last_trace;
    for (cocluster::Domain d : domains) {
      const int k = d == cocluster::Domain::Face ? opts.cfg.k_f : opts.cfg.k_l;
      const cocluster::BaselineRun run = cocluster::run_baseline_full(
          ds, d, *parsed, k, opts.cfg.seed, opts.cfg.inner);
      if (run.cannot_violations > 0) {
        std::cerr << "warning: " << run.cannot_violations
                  << " cannot links could not be satisfied in the " << cocluster::domain_name(d)
                  << " domain\n";
      }
      if (d == cocluster::Domain::Face) {
        res.faces = run.assignment;
      } else {
        res.locations = run.assignment;
      }
      res.inner_traces.push_back(run.objective_trace);
      res.inner_trace_names.push_back(std::string("baseline/") + cocluster::domain_name(d));
      last_trace = run.objective_trace;
    }
    const json result = cocluster::result_to_json(res, opts.cfg, opts.method);
    std::ofstream rj(out / "result.json", std::ios::binary);
    rj << result.dump(2) << '\n';
    write_trace_csv(out / "trace.csv", last_trace);
  }

  cocluster::write_manifest(out / "manifest.json", "cluster", to_json(opts), opts.cfg.seed,
                            json{{"bundle", opts.in}},
                            json{{"result", (out / "result.json").string()},
                                 {"trace", (out / "trace.csv").string()}});
  return kExitOk;
}

// --------------------------------------------------------------------------
// evaluate / sweep-k
// --------------------------------------------------------------------------

struct EvaluateOpts {
  std::string in;      // dataset bundle (ground truth source)
  std::string result;  // result.json from `cluster` (plain evaluate mode)
  std::string out;
  std::string sweep_range;  // "2:13" enables sweep mode
  std::vector<std::string> methods = {"cocluster", "kmeans_plain", "kmeans_constrained",
                                      "kernel_kmeans_plain"};
  int n_seeds = 1;
  bool plot = false;
  cocluster::CoClusterConfig base;
};

json to_json(const EvaluateOpts& o) {
  json j;
  j["in"] = o.in;
  j["result"] = o.result;
  j["out"] = o.out;
  j["sweep_range"] = o.sweep_range;
  j["methods"] = o.methods;
  j["n_seeds"] = o.n_seeds;
  j["plot"] = o.plot;
  j["base"] = cocluster::to_json(o.base);
  return j;
}

EvaluateOpts evaluate_opts_from_manifest(const json& m) {
  EvaluateOpts o;
  const json& c = m.at("config");
  o.in = c.at("in").get<std::string>();
  o.result = c.at("result").get<std::string>();
  o.out = c.at("out").get<std::string>();
  o.sweep_range = c.at("sweep_range").get<std::string>();
  o.methods = c.at("methods").get<std::vector<std::string>>();
  o.n_seeds = c.at("n_seeds").get<int>();
  o.plot = c.at("plot").get<bool>();
  o.base = cocluster::cocluster_config_from_json(c.at("base"));
  return o;
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos) {
    const int k = static_cast<int>(cocluster::parse_int(s));
    return {k, k};
  }
  return {static_cast<int>(cocluster::parse_int(s.substr(0, pos))),
          static_cast<int>(cocluster::parse_int(s.substr(pos + 1)))};
}

int cmd_evaluate(const EvaluateOpts& opts, const std::string& command_name) {
  const cocluster::Dataset ds = cocluster::load_dataset(opts.in);
  const auto truth = cocluster::load_ground_truth(opts.in);
  if (!truth) {
    std::cerr << "error: " << opts.in << " has no ground_truth.json\n";
    return kExitUsage;
  }
  cocluster::validate(*truth, ds);
  fs::create_directories(opts.out);
  const fs::path out(opts.out);

  cocluster::EvalReport report;
  if (!opts.sweep_range.empty()) {
    cocluster::SweepSpec spec;
    const auto [lo, hi] = parse_range(opts.sweep_range);
    spec.k_min = lo;
    spec.k_max = hi;
    spec.methods = opts.methods;
    spec.seeds.clear();
    for (int s = 0; s < opts.n_seeds; ++s) spec.seeds.push_back(opts.base.seed + static_cast<std::uint64_t>(s));
    spec.base = opts.base;
    report = cocluster::sweep_k(ds, *truth, spec);
  } else {
    if (opts.result.empty()) {
      std::cerr << "error: need --result FILE or --sweep-k RANGE\n";
      return kExitUsage;
    }
    const json r = cocluster::read_json_file(opts.result);
    const std::string method = r.value("method", "unknown");
    const std::uint64_t seed = r.at("config").at("seed").get<std::uint64_t>();
    if (r.contains("face_labels")) {
      const auto labels = r.at("face_labels").get<std::vector<int>>();
      report.rows.push_back({"face", method, r.at("k_f").get<int>(), seed,
                             cocluster::rand_index(labels, truth->face_labels),
                             cocluster::adjusted_rand_index(labels, truth->face_labels), 0.0});
    }
    if (r.contains("location_labels")) {
      const auto labels = r.at("location_labels").get<std::vector<int>>();
      report.rows.push_back({"location", method, r.at("k_l").get<int>(), seed,
                             cocluster::rand_index(labels, truth->location_labels),
                             cocluster::adjusted_rand_index(labels, truth->location_labels), 0.0});
    }
    if (report.rows.empty()) {
      std::cerr << "error: " << opts.result << " holds no assignments\n";
      return kExitUsage;
    }
  }

  cocluster::write_report_csv(out / "eval.csv", report);
  if (opts.plot) {
    cocluster::write_report_svg(out / "face.svg", report, "face");
    cocluster::write_report_svg(out / "location.svg", report, "location");
  }
  cocluster::write_manifest(out / "manifest.json", command_name, to_json(opts), opts.base.seed,
                            json{{"bundle", opts.in}, {"result", opts.result}},
                            json{{"eval", (out / "eval.csv").string()}});
  return kExitOk;
}

// --------------------------------------------------------------------------

void add_cocluster_flags(CLI::App* cmd, cocluster::CoClusterConfig& cfg, std::string& sigma_str,
                         std::string& init_str) {
  cmd->add_option("--beta", cfg.beta, "cross-domain coupling strength");
  cmd->add_option("--w", [&cfg](const std::vector<std::string>& vals) {
        cfg.w = std::stod(vals.front());
        return true;
      },
      "link penalty weight (default: 2*max|A| per domain)");
  cmd->add_option("--sigma", sigma_str,
                  "diagonal shift policy: gershgorin, exact, or a fixed value");
  cmd->add_option("--outer-max", cfg.outer_max, "max alternation rounds");
  cmd->add_option("--outer-tol", cfg.outer_tol, "relative joint-objective tolerance");
  cmd->add_option("--bandwidth", cfg.time_bandwidth_s, "temporal mean-shift bandwidth (s)");
  cmd->add_option("--teleport-window", cfg.teleport_window_s, "teleport rule window (s)");
  cmd->add_option("--teleport-threshold", cfg.teleport_threshold_km, "teleport rule distance (km)");
  cmd->add_option("--inner-max-iter", cfg.inner.max_iter, "max solver sweeps");
  cmd->add_option("--inner-tol", cfg.inner.tol, "solver objective tolerance");
  cmd->add_option("--init", init_str, "solver init: farthest_first or random");
  cmd->add_flag("--soft", [&cfg](std::int64_t) { cfg.inner.hard = false; },
                "penalty-only links (no hard enforcement)");
  cmd->add_flag("--freeze-coupling", cfg.freeze_coupling,
                "disable all cross-domain terms (equivalent to independent clustering)");
  cmd->add_option("--dump-kernels", cfg.dump_dir, "dump assembled kernels to this directory");
}

void finish_cocluster_flags(cocluster::CoClusterConfig& cfg, const std::string& sigma_str,
                            const std::string& init_str) {
  if (!sigma_str.empty()) {
    if (sigma_str == "gershgorin" || sigma_str == "exact") {
      cfg.sigma_policy = cocluster::parse_sigma_policy(sigma_str);
    } else {
      cfg.sigma_policy = cocluster::SigmaPolicy::Fixed;
      cfg.sigma_fixed = cocluster::parse_double(sigma_str);
    }
  }
  if (!init_str.empty()) cfg.inner.init = cocluster::parse_init_strategy(init_str);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"People and location co-clustering toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a key=value file");
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (also: COCLUSTER_THREADS)");

  // generate ---------------------------------------------------------------
  GenerateOpts gen;
  std::string gen_manifest;
  auto* cmd_gen = app.add_subcommand("generate", "write a synthetic dataset bundle");
  cmd_gen->add_option("--out", gen.out, "output bundle directory");
  cmd_gen->add_option("--kf", gen.cfg.k_f, "planted face clusters")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--kl", gen.cfg.k_l, "planted location clusters")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--faces-per-cluster", gen.cfg.faces_per_cluster, "");
  cmd_gen->add_option("--locations-per-cluster", gen.cfg.locations_per_cluster, "");
  cmd_gen->add_option("--face-dim", gen.cfg.face_dim, "");
  cmd_gen->add_option("--location-dim", gen.cfg.location_dim, "");
  cmd_gen->add_option("--separation", gen.cfg.separation, "cluster center scale");
  cmd_gen->add_option("--noise", gen.cfg.noise, "feature noise stddev");
  cmd_gen->add_option("--cooccurrence", gen.cfg.cooccurrence_strength,
                      "home-cluster co-occurrence probability");
  cmd_gen->add_option("--public-fraction", gen.cfg.public_fraction, "");
  cmd_gen->add_option("--burst-images", gen.cfg.burst_images, "");
  cmd_gen->add_option("--burst-gap", gen.cfg.burst_gap_s, "seconds between bursts");
  cmd_gen->add_option("--burst-step", gen.cfg.burst_step_s, "seconds between images in a burst");
  cmd_gen->add_option("--verified-pairs", gen.cfg.verified_pairs_per_cluster, "per cluster");
  cmd_gen->add_flag("--geo", gen.cfg.with_geo, "attach per-cluster geo tags");
  cmd_gen->add_option("--seed", gen.seed, "RNG seed");
  cmd_gen->add_option("--from-manifest", gen_manifest, "replay a previous run");

  // cluster ----------------------------------------------------------------
  ClusterOpts clu;
  std::string clu_manifest, clu_sigma, clu_init;
  auto* cmd_clu = app.add_subcommand("cluster", "run co-clustering or a baseline on a bundle");
  cmd_clu->add_option("--in", clu.in, "dataset bundle directory");
  cmd_clu->add_option("--out", clu.out, "output directory");
  cmd_clu->add_option("--kf", clu.cfg.k_f, "face clusters")->check(CLI::PositiveNumber);
  cmd_clu->add_option("--kl", clu.cfg.k_l, "location clusters")->check(CLI::PositiveNumber);
  cmd_clu->add_option("--seed", clu.cfg.seed, "RNG seed");
  cmd_clu->add_option("--method", clu.method,
                      "cocluster | kmeans_plain | kmeans_constrained | kernel_kmeans_plain");
  cmd_clu->add_option("--domain", clu.domain, "face | location | both (baselines only)");
  add_cocluster_flags(cmd_clu, clu.cfg, clu_sigma, clu_init);
  cmd_clu->add_option("--from-manifest", clu_manifest, "replay a previous run");

  // evaluate ---------------------------------------------------------------
  EvaluateOpts ev;
  std::string ev_manifest, ev_sigma, ev_init;
  auto* cmd_ev = app.add_subcommand("evaluate", "score results against ground truth");
  cmd_ev->add_option("--in", ev.in, "dataset bundle directory (holds ground truth)");
  cmd_ev->add_option("--result", ev.result, "result.json produced by `cluster`");
  cmd_ev->add_option("--out", ev.out, "output directory");
  cmd_ev->add_option("--sweep-k", ev.sweep_range, "run the full protocol over K range, e.g. 2:13");
  cmd_ev->add_option("--methods", ev.methods, "methods for sweep mode")->delimiter(',');
  cmd_ev->add_option("--seeds", ev.n_seeds, "seeds per cell in sweep mode");
  cmd_ev->add_flag("--plot", ev.plot, "emit SVG line charts");
  cmd_ev->add_option("--seed", ev.base.seed, "base RNG seed");
  add_cocluster_flags(cmd_ev, ev.base, ev_sigma, ev_init);
  cmd_ev->add_option("--from-manifest", ev_manifest, "replay a previous run");

  // sweep-k ----------------------------------------------------------------
  EvaluateOpts sw;
  sw.sweep_range = "2:13";
  std::string sw_manifest, sw_sigma, sw_init;
  auto* cmd_sw = app.add_subcommand("sweep-k", "RandIndex sweep over K for every method");
  cmd_sw->add_option("--in", sw.in, "dataset bundle directory (holds ground truth)");
  cmd_sw->add_option("--out", sw.out, "output directory");
  cmd_sw->add_option("--k", sw.sweep_range, "K range, e.g. 2:13");
  cmd_sw->add_option("--methods", sw.methods, "comma-separated method list")->delimiter(',');
  cmd_sw->add_option("--seeds", sw.n_seeds, "seeds per cell");
  cmd_sw->add_flag("--plot", sw.plot, "emit SVG line charts");
  cmd_sw->add_option("--seed", sw.base.seed, "base RNG seed");
  add_cocluster_flags(cmd_sw, sw.base, sw_sigma, sw_init);
  cmd_sw->add_option("--from-manifest", sw_manifest, "replay a previous run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    apply_threads(threads);
    if (cmd_gen->parsed()) {
      GenerateOpts opts = gen;
      if (!gen_manifest.empty()) {
        opts = generate_opts_from_manifest(cocluster::read_json_file(gen_manifest));
      } else if (opts.out.empty()) {
        std::cerr << "error: --out is required\n";
        return kExitUsage;
      }
      return cmd_generate(opts);
    }
    if (cmd_clu->parsed()) {
      ClusterOpts opts = clu;
      if (!clu_manifest.empty()) {
        opts = cluster_opts_from_manifest(cocluster::read_json_file(clu_manifest));
      } else {
        finish_cocluster_flags(opts.cfg, clu_sigma, clu_init);
        if (opts.in.empty() || opts.out.empty()) {
          std::cerr << "error: --in and --out are required\n";
          return kExitUsage;
        }
      }
      return cmd_cluster(opts);
    }
    if (cmd_ev->parsed() || cmd_sw->parsed()) {
      const bool is_sweep = cmd_sw->parsed();
      EvaluateOpts opts = is_sweep ? sw : ev;
      const std::string& manifest = is_sweep ? sw_manifest : ev_manifest;
      if (!manifest.empty()) {
        opts = evaluate_opts_from_manifest(cocluster::read_json_file(manifest));
      } else {
        finish_cocluster_flags(opts.base, is_sweep ? sw_sigma : ev_sigma,
                               is_sweep ? sw_init : ev_init);
        if (opts.in.empty() || opts.out.empty()) {
          std::cerr << "error: --in and --out are required\n";
          return kExitUsage;
        }
      }
      return cmd_evaluate(opts, is_sweep ? "sweep-k" : "evaluate");
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
