// Experiment runner: simulation, chain runs, ground-truth checks and
// post-processing behind one config file. See README.md for the schemas.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pmcmc/config.hpp"
#include "pmcmc/diagnostics.hpp"
#include "pmcmc/io.hpp"
#include "pmcmc/oracle_checks.hpp"
#include "pmcmc/samplers.hpp"
#include "pmcmc/version.hpp"

namespace fs = std::filesystem;
using pmcmc::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t chains = 1;
  std::size_t threads = 1;
  bool trace = false;
};

void add_config_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--preset", o.preset,
                  "named base configuration, overridable by --config")
      ->check(CLI::IsMember({"fig2", "fig3", "lgcheck"}));
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "output directory");
}

void add_chain_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--chains", o.chains, "independently seeded chains to run")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "worker threads for the chain fan-out")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--trace", o.trace,
                "dump each chain's initialization sweep as a particle trace");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pmcmc::ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw pmcmc::ConfigError(std::string("config is not valid JSON: ") +
                             e.what());
  }
}

// Precedence, lowest to highest: preset, config file, command-line flags.
json build_config_document(const CLI::App* cmd, const CommonOpts& o) {
  json doc = json::object();
  if (!o.preset.empty()) doc = pmcmc::preset_json(o.preset);
  if (!o.config_path.empty()) {
    doc = pmcmc::merge_config(doc, load_json_file(o.config_path));
  }
  if (doc.empty()) {
    throw pmcmc::ConfigError(
        "no configuration given; pass --config and/or --preset");
  }
  if (cmd->count("--seed") > 0) doc["seed"] = o.seed;
  if (!o.out.empty()) doc["out_dir"] = o.out;
  return doc;
}

fs::path resolve_out_dir(const pmcmc::RunConfig& cfg) {
  std::string dir;
  if (cfg.out_dir) {
    dir = *cfg.out_dir;
  } else if (const char* env = std::getenv("PMCMC_OUT_DIR")) {
    dir = env;
  } else {
    dir = ".";
  }
  fs::create_directories(dir);
  return {dir};
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << j.dump(2) << '\n';
}

struct PreparedData {
  pmcmc::SimulatedData data;
  std::vector<double> theta;  // generating value; empty when read from file
  std::uint64_t data_seed = 0;
  bool simulated = false;
};

template <class M>
PreparedData prepare_data(const M& model, const pmcmc::RunConfig& cfg) {
  PreparedData p;
  if (cfg.data.source == pmcmc::DataSource::file) {
    p.data = pmcmc::read_dataset_csv(cfg.data.path);
    return p;
  }
  p.simulated = true;
  p.data_seed = cfg.data.seed
                    ? *cfg.data.seed
                    : pmcmc::RngStream(cfg.seed).substream(11).key();
  if (cfg.data.theta) {
    p.theta = *cfg.data.theta;
    if (p.theta.size() != M::param_dim) {
      throw pmcmc::ConfigError("data.theta has wrong dimension for the model");
    }
  } else {
    p.theta.resize(M::param_dim);
    pmcmc::RngStream prior_rng = pmcmc::RngStream(p.data_seed).substream(1);
    model.sample_prior(prior_rng, p.theta);
  }
  p.data = pmcmc::simulate(model, p.theta, cfg.data.n_steps,
                           pmcmc::RngStream(p.data_seed).substream(2).key());
  return p;
}

json acceptance_json(std::span<const std::uint8_t> flags) {
  const std::size_t n = flags.size();
  std::size_t accepted = 0;
  for (auto f : flags) accepted += f;
  const std::size_t window = std::max<std::size_t>(1, n / 10);
  json j;
  j["overall"] = static_cast<double>(accepted) / static_cast<double>(n);
  j["window"] = window;
  j["by_window"] = pmcmc::acceptance_rate(flags, window);
  return j;
}

json freeze_json(const std::vector<std::size_t>& runs, const char* basis) {
  json hist = json::object();
  std::size_t max_run = 0;
  for (const auto& [len, count] : pmcmc::freeze_histogram(runs)) {
    hist[std::to_string(len)] = count;
    max_run = std::max(max_run, len);
  }
  json j;
  j["basis"] = basis;
  j["n_runs"] = runs.size();
  j["max_run_length"] = max_run;
  j["histogram"] = hist;
  return j;
}

json theta_json(const std::vector<double>& thetas, std::size_t n_iters,
                std::size_t dim) {
  json comps = json::array();
  std::vector<double> series(n_iters);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t it = 0; it < n_iters; ++it) {
      series[it] = thetas[it * dim + i];
    }
    json c;
    c["mean"] = pmcmc::mean(series);
    c["ess"] = pmcmc::ess_mcmc(series);
    comps.push_back(c);
  }
  return comps;
}

json diagnostics_from_output(const pmcmc::ChainOutput& out) {
  json j;
  j["n_iters"] = out.n_iters;
  j["theta_dim"] = out.theta_dim;
  j["path_len"] = out.path_len;
  j["proposal_dim"] = out.proposal_dim;
  j["acceptance"] = acceptance_json(out.accept_flags);
  j["freeze"] =
      freeze_json(pmcmc::freeze_runs_from_flags(out.repeat_flags),
                  "joint_state");
  j["theta"] = theta_json(out.thetas, out.n_iters, out.theta_dim);
  std::size_t collapsed = 0, out_of_support = 0, mh_moves = 0;
  for (auto f : out.collapsed_flags) collapsed += f;
  for (auto f : out.in_support_flags) out_of_support += 1 - f;
  for (auto k : out.kinds) mh_moves += (k == 'm') ? 1 : 0;
  j["n_collapsed_proposals"] = collapsed;
  j["n_out_of_support_proposals"] = out_of_support;
  j["move_kinds"] = {{"marginal_mh", mh_moves},
                     {"gibbs", out.n_iters - mh_moves}};
  j["stored_paths"] = out.path_iters.size();
  return j;
}

// A chain CSV carries paths only at thinned iterations, so freeze runs
// recomputed from one rest on theta equality alone; the basis field says so.
json diagnostics_from_csv(const pmcmc::ChainCsv& c) {
  json j;
  j["n_iters"] = c.n_iters;
  j["theta_dim"] = c.theta_dim;
  j["path_len"] = c.path_len;
  j["proposal_dim"] = c.theta_dim + c.path_len;
  j["acceptance"] = acceptance_json(c.accept_flags);
  j["freeze"] = freeze_json(
      pmcmc::freeze_runs(c.thetas, {}, c.n_iters, c.theta_dim, 0),
      "theta_only");
  j["theta"] = theta_json(c.thetas, c.n_iters, c.theta_dim);
  j["stored_paths"] = c.path_iters.size();
  return j;
}

template <class F>
void run_parallel(std::size_t n_threads, std::size_t n_tasks, F&& f) {
  if (n_threads <= 1 || n_tasks <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(n_threads, n_tasks);
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

const char* algorithm_name(pmcmc::Algorithm a) {
  switch (a) {
    case pmcmc::Algorithm::pmmh: return "pmmh";
    case pmcmc::Algorithm::pg: return "pg";
    default: return "hybrid";
  }
}

json base_manifest(const std::string& command, const pmcmc::RunConfig& cfg,
                   const json& resolved, const PreparedData& prepared) {
  json m;
  m["version"] = pmcmc::kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config"] = resolved;
  json d;
  d["simulated"] = prepared.simulated;
  d["n_steps"] = prepared.data.y.size();
  if (prepared.simulated) {
    d["seed"] = prepared.data_seed;
    d["theta"] = prepared.theta;
  } else {
    d["path"] = cfg.data.path;
  }
  m["data"] = d;
  return m;
}

// Writes the manifest with data provenance pinned, so a replay needs no
// derived values: the recorded config always carries the concrete data seed
// and generating theta.
json resolve_document(json doc, const PreparedData& prepared,
                      const pmcmc::RunConfig& cfg) {
  doc["seed"] = cfg.seed;
  if (prepared.simulated) {
    doc["data"]["seed"] = prepared.data_seed;
    doc["data"]["theta"] = prepared.theta;
  }
  return doc;
}

int run_simulate(const CommonOpts&, const json& doc) {
  pmcmc::RunConfig cfg = pmcmc::parse_config(doc);
  if (cfg.data.source != pmcmc::DataSource::simulate) {
    throw pmcmc::ConfigError(
        "simulate subcommand needs data.source == \"simulate\"");
  }
  return pmcmc::with_model(cfg.model, [&](const auto& model) -> int {
    const PreparedData prepared = prepare_data(model, cfg);
    const fs::path out_dir = resolve_out_dir(cfg);
    const fs::path dataset = out_dir / "dataset.csv";
    pmcmc::write_dataset_csv(dataset.string(), prepared.data);
    json manifest =
        base_manifest("simulate", cfg, resolve_document(doc, prepared, cfg),
                      prepared);
    manifest["outputs"] = json::array({dataset.filename().string()});
    write_json_file(out_dir / "manifest.json", manifest);
    std::cout << "wrote " << dataset.string() << " (" << prepared.data.y.size()
              << " steps)\n";
    return 0;
  });
}

int run_chains_command(const std::string& command, pmcmc::Algorithm algo,
                       const CommonOpts& opts, const json& doc) {
  pmcmc::RunConfig cfg = pmcmc::parse_config(doc);
  if (!cfg.chain.proposal_given) {
    throw pmcmc::ConfigError("missing required config field: chain.proposal");
  }
  if (command == "abc-pmmh" && !cfg.filter.abc) {
    throw pmcmc::ConfigError("abc-pmmh requires a filter.abc section");
  }
  return pmcmc::with_model(cfg.model, [&](const auto& model) -> int {
    const PreparedData prepared = prepare_data(model, cfg);
    const std::size_t t_len = prepared.data.y.size();

    pmcmc::ChainConfig cc;
    cc.algorithm = algo;
    cc.n_iters = cfg.chain.n_iters;
    cc.mix_prob = cfg.chain.mix_prob;
    cc.proposal = cfg.chain.proposal;
    cc.init_theta = cfg.chain.init_theta;
    if (cfg.chain.init_path_constant) {
      cc.init_path = std::vector<double>(t_len, *cfg.chain.init_path_constant);
    }
    cc.init_retries = cfg.chain.init_retries;
    cc.path_thin = cfg.chain.path_thin;
    cc.keep_init_system = opts.trace;
    pmcmc::validate_chain_config(cc, cfg.filter);

    pmcmc::RngStream root(cfg.seed);
    std::vector<std::uint64_t> seeds(opts.chains);
    for (std::size_t i = 0; i < opts.chains; ++i) {
      seeds[i] = root.substream(7, i + 1).key();
    }
    std::vector<pmcmc::ChainOutput> results(opts.chains);
    run_parallel(opts.threads, opts.chains, [&](std::size_t i) {
      results[i] = pmcmc::run_chain(model, prepared.data.y, cfg.filter, cc,
                                    seeds[i]);
    });

    const fs::path out_dir = resolve_out_dir(cfg);
    json outputs = json::array();
    if (prepared.simulated) {
      pmcmc::write_dataset_csv((out_dir / "dataset.csv").string(),
                               prepared.data);
      outputs.push_back("dataset.csv");
    }
    for (std::size_t i = 0; i < opts.chains; ++i) {
      const std::string suffix =
          opts.chains == 1 ? "" : "_" + std::to_string(i + 1);
      const std::string chain_name = "chain" + suffix + ".csv";
      const std::string diag_name = "diagnostics" + suffix + ".json";
      pmcmc::write_chain_csv((out_dir / chain_name).string(), results[i]);
      write_json_file(out_dir / diag_name, diagnostics_from_output(results[i]));
      outputs.push_back(chain_name);
      outputs.push_back(diag_name);
      if (opts.trace && results[i].init_system) {
        const std::string trace_name = "trace" + suffix + ".csv";
        pmcmc::write_trace_csv((out_dir / trace_name).string(),
                               *results[i].init_system);
        outputs.push_back(trace_name);
      }
    }

    json resolved = resolve_document(doc, prepared, cfg);
    resolved["chain"]["algorithm"] = algorithm_name(algo);
    json manifest = base_manifest(command, cfg, resolved, prepared);
    manifest["chains"] = opts.chains;
    manifest["threads"] = opts.threads;
    manifest["trace"] = opts.trace;
    manifest["chain_seeds"] = seeds;
    manifest["outputs"] = outputs;
    write_json_file(out_dir / "manifest.json", manifest);

    for (std::size_t i = 0; i < opts.chains; ++i) {
      std::size_t accepted = 0;
      for (auto f : results[i].accept_flags) accepted += f;
      std::cout << "chain " << (i + 1) << ": " << results[i].n_iters
                << " iterations, acceptance "
                << static_cast<double>(accepted) /
                       static_cast<double>(results[i].n_iters)
                << "\n";
    }
    std::cout << "wrote " << (out_dir / "manifest.json").string() << "\n";
    return 0;
  });
}

int run_oracle_check(const CommonOpts&, const json& doc) {
  pmcmc::RunConfig cfg = pmcmc::parse_config(doc);
  if (cfg.model.kind != pmcmc::ModelKind::linear_gaussian) {
    throw pmcmc::ConfigError(
        "oracle-check requires model.kind == \"linear_gaussian\"");
  }
  if (cfg.filter.abc) {
    throw pmcmc::ConfigError(
        "oracle-check compares against the exact likelihood; remove "
        "filter.abc");
  }
  if (!cfg.data.theta || cfg.data.theta->size() != 1) {
    throw pmcmc::ConfigError("oracle-check needs data.theta = [ar_coeff]");
  }
  pmcmc::LinearGaussianParams params = cfg.model.linear_gaussian;
  params.ar_coeff = (*cfg.data.theta)[0];
  const pmcmc::LinearGaussianModel model(params);
  const std::vector<double> theta = {params.ar_coeff};

  const std::uint64_t data_seed =
      cfg.data.seed ? *cfg.data.seed
                    : pmcmc::RngStream(cfg.seed).substream(11).key();
  const auto ratio_data =
      pmcmc::simulate(model, theta, cfg.oracle.ratio_n_steps,
                      pmcmc::RngStream(data_seed).substream(31).key());
  const auto ks_data =
      pmcmc::simulate(model, theta, cfg.data.n_steps,
                      pmcmc::RngStream(data_seed).substream(32).key());

  pmcmc::FilterConfig ratio_fc = cfg.filter;
  ratio_fc.n_particles = cfg.oracle.ratio_n_particles;
  pmcmc::RngStream root(cfg.seed);
  const auto unbiased = pmcmc::check_estimator_unbiasedness(
      model, ratio_data.y, ratio_fc, cfg.oracle.ratio_runs,
      root.substream(41).key());

  pmcmc::KsCheckConfig kc;
  kc.n_iters = cfg.oracle.ks_iters;
  kc.burn_frac = cfg.oracle.ks_burn_frac;
  kc.thin = cfg.oracle.ks_thin;
  kc.proposal_sd = cfg.oracle.ks_proposal_sd;
  kc.threshold = cfg.oracle.ks_threshold;
  const auto ks = pmcmc::check_pmmh_vs_ideal(model, ks_data.y, cfg.filter, kc,
                                             root.substream(42).key());

  std::cout << "unbiasedness: mean_ratio=" << unbiased.mean_ratio
            << " se=" << unbiased.se << " runs=" << unbiased.n_runs << " -> "
            << (unbiased.pass ? "PASS" : "FAIL") << "\n";
  std::cout << "pmmh-vs-ideal: ks=" << ks.ks << " threshold=" << kc.threshold
            << " kept=" << ks.n_kept_pm << "/" << ks.n_kept_ideal
            << " accept=" << ks.pm_accept_rate << "/" << ks.ideal_accept_rate
            << " -> " << (ks.pass ? "PASS" : "FAIL") << "\n";

  const fs::path out_dir = resolve_out_dir(cfg);
  json result;
  result["unbiasedness"] = {{"mean_ratio", unbiased.mean_ratio},
                            {"se", unbiased.se},
                            {"n_runs", unbiased.n_runs},
                            {"pass", unbiased.pass}};
  result["pmmh_vs_ideal"] = {{"ks", ks.ks},
                             {"threshold", kc.threshold},
                             {"n_kept_pm", ks.n_kept_pm},
                             {"n_kept_ideal", ks.n_kept_ideal},
                             {"pm_accept_rate", ks.pm_accept_rate},
                             {"ideal_accept_rate", ks.ideal_accept_rate},
                             {"pass", ks.pass}};
  write_json_file(out_dir / "oracle_check.json", result);

  PreparedData prepared;
  prepared.simulated = true;
  prepared.data_seed = data_seed;
  prepared.theta = theta;
  prepared.data = ks_data;
  json manifest = base_manifest("oracle-check", cfg,
                                resolve_document(doc, prepared, cfg), prepared);
  manifest["outputs"] = json::array({"oracle_check.json"});
  write_json_file(out_dir / "manifest.json", manifest);

  return (unbiased.pass && ks.pass) ? 0 : 1;
}

int run_diagnose(const std::string& chain_csv, const std::string& out) {
  const pmcmc::ChainCsv c = pmcmc::read_chain_csv(chain_csv);
  fs::path out_path;
  if (!out.empty()) {
    fs::create_directories(out);
    out_path = fs::path(out) / "diagnostics.json";
  } else {
    fs::path parent = fs::path(chain_csv).parent_path();
    if (parent.empty()) parent = ".";
    out_path = parent / "diagnostics.json";
  }
  write_json_file(out_path, diagnostics_from_csv(c));
  std::cout << "wrote " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle MCMC experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pmcmc::kVersion);

  CommonOpts opts;
  std::string diagnose_csv;
  std::string diagnose_out;

  CLI::App* sim = app.add_subcommand("simulate", "generate a dataset CSV");
  add_config_options(sim, opts);

  CLI::App* pmmh = app.add_subcommand(
      "pmmh", "marginal Metropolis-Hastings with a filter estimate");
  CLI::App* pg = app.add_subcommand(
      "pg", "Particle Gibbs with conditional sweeps");
  CLI::App* hybrid = app.add_subcommand(
      "hybrid", "Gibbs with occasional marginal MH refreshes");
  CLI::App* abc_pmmh = app.add_subcommand(
      "abc-pmmh", "likelihood-free marginal Metropolis-Hastings");
  for (CLI::App* cmd : {pmmh, pg, hybrid, abc_pmmh}) {
    add_config_options(cmd, opts);
    add_chain_options(cmd, opts);
  }

  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "validate against the closed-form linear-Gaussian "
                      "filter; exit 1 on a failed check");
  add_config_options(oracle, opts);

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "recompute the diagnostics summary from a chain CSV");
  diagnose->add_option("chain_csv", diagnose_csv, "chain CSV to post-process")
      ->required();
  diagnose->add_option("--out", diagnose_out,
                       "directory for diagnostics.json (default: next to the "
                       "input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      return run_simulate(opts, build_config_document(sim, opts));
    }
    if (pmmh->parsed()) {
      return run_chains_command("pmmh", pmcmc::Algorithm::pmmh, opts,
                                build_config_document(pmmh, opts));
    }
    if (pg->parsed()) {
      return run_chains_command("pg", pmcmc::Algorithm::pg, opts,
                                build_config_document(pg, opts));
    }
    if (hybrid->parsed()) {
      return run_chains_command("hybrid", pmcmc::Algorithm::hybrid, opts,
                                build_config_document(hybrid, opts));
    }
    if (abc_pmmh->parsed()) {
      return run_chains_command("abc-pmmh", pmcmc::Algorithm::pmmh, opts,
                                build_config_document(abc_pmmh, opts));
    }
    if (oracle->parsed()) {
      return run_oracle_check(opts, build_config_document(oracle, opts));
    }
    if (diagnose->parsed()) {
      return run_diagnose(diagnose_csv, diagnose_out);
    }
  } catch (const pmcmc::ConfigError& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "validation"}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "runtime"}}.dump() << "\n";
    return 1;
  }
  return 0;
}
