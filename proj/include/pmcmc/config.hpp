#ifndef PMCMC_CONFIG_HPP
#define PMCMC_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmcmc/abc.hpp"
#include "pmcmc/adaptive.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/prc.hpp"
#include "pmcmc/samplers.hpp"
#include "pmcmc/theta_logistic.hpp"

namespace pmcmc {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Allowed-key tree. Validation is shape-only here; value ranges are checked
// by the component validators after parsing.
struct KeySchema {
  std::map<std::string, KeySchema> children;
};

inline const KeySchema& config_schema() {
  static const KeySchema schema{{
      {"seed", {}},
      {"out_dir", {}},
      {"model",
       {{
           {"kind", {}},
           {"transition_var", {}},
           {"observation_var", {}},
           {"init_sd", {}},
           {"r_max", {}},
           {"zeta_min", {}},
           {"zeta_max", {}},
           {"k_max", {}},
           {"ar_coeff", {}},
           {"state_var", {}},
           {"obs_var", {}},
           {"init_mean", {}},
           {"init_var", {}},
       }}},
      {"data",
       {{
           {"source", {}},
           {"path", {}},
           {"n_steps", {}},
           {"theta", {}},
           {"seed", {}},
       }}},
      {"filter",
       {{
           {"n_particles", {}},
           {"resampling", {}},
           {"prc",
            {{
                {"threshold", {}},
                {"fixed_c", {}},
                {"quantile_alpha", {}},
                {"scope", {}},
                {"max_attempts", {}},
                {"r_estimation_draws", {}},
            }}},
           {"abc",
            {{
                {"epsilon", {}},
                {"n_pseudo", {}},
                {"kernel", {}},
            }}},
       }}},
      {"chain",
       {{
           {"algorithm", {}},
           {"n_iters", {}},
           {"mix_prob", {}},
           {"path_thin", {}},
           {"init_theta", {}},
           {"init_path_constant", {}},
           {"init_retries", {}},
           {"proposal",
            {{
                {"kind", {}},
                {"sigma0", {}},
                {"am_start", {}},
                {"am_beta", {}},
            }}},
       }}},
      {"oracle_check",
       {{
           {"ratio_runs", {}},
           {"ratio_n_steps", {}},
           {"ratio_n_particles", {}},
           {"ks_iters", {}},
           {"ks_burn_frac", {}},
           {"ks_thin", {}},
           {"ks_proposal_sd", {}},
           {"ks_threshold", {}},
       }}},
  }};
  return schema;
}

inline void check_keys(const json& j, const KeySchema& schema,
                       const std::string& prefix) {
  if (!j.is_object()) return;
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const auto it = schema.children.find(key);
    if (it == schema.children.end()) {
      throw ConfigError("unknown config key: " + path);
    }
    if (!it->second.children.empty()) check_keys(value, it->second, path);
  }
}

inline const json* find(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + " must be a number");
  return j.get<double>();
}

inline std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw ConfigError(path + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + " must be a string");
  return j.get<std::string>();
}

inline std::vector<double> as_double_vec(const json& j,
                                         const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(as_double(e, path));
  return v;
}

inline double get_double(const json& j, const char* key,
                         const std::string& prefix, double def) {
  const json* p = find(j, key);
  return p ? as_double(*p, prefix + "." + key) : def;
}

inline std::size_t get_count(const json& j, const char* key,
                             const std::string& prefix, std::size_t def) {
  const json* p = find(j, key);
  return p ? as_count(*p, prefix + "." + key) : def;
}

inline const json& require(const json& j, const char* key,
                           const std::string& prefix) {
  const json* p = find(j, key);
  if (!p) {
    throw ConfigError("missing required config field: " +
                      (prefix.empty() ? key : prefix + "." + key));
  }
  return *p;
}

}  // namespace detail

enum class ModelKind { theta_logistic, linear_gaussian };

struct ModelConfig {
  ModelKind kind = ModelKind::theta_logistic;
  ThetaLogisticConfig theta_logistic;
  LinearGaussianParams linear_gaussian;
};

enum class DataSource { simulate, file };

struct DataConfig {
  DataSource source = DataSource::simulate;
  std::string path;
  std::size_t n_steps = 100;
  std::optional<std::vector<double>> theta;
  std::optional<std::uint64_t> seed;
};

struct ChainSection {
  std::optional<Algorithm> algorithm;
  std::size_t n_iters = 10000;
  double mix_prob = 0.1;
  std::size_t path_thin = 10;
  std::optional<std::vector<double>> init_theta;
  std::optional<double> init_path_constant;
  std::size_t init_retries = 10;
  ProposalConfig proposal;
  bool proposal_given = false;
};

struct OracleCheckConfig {
  std::size_t ratio_runs = 500;
  std::size_t ratio_n_steps = 25;
  std::size_t ratio_n_particles = 100;
  std::size_t ks_iters = 50000;
  double ks_burn_frac = 0.2;
  std::size_t ks_thin = 10;
  double ks_proposal_sd = 0.15;
  double ks_threshold = 0.05;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::optional<std::string> out_dir;
  ModelConfig model;
  DataConfig data;
  FilterConfig filter;
  ChainSection chain;
  OracleCheckConfig oracle;
  json resolved;  // fully merged document, written to the run manifest
};

inline ModelConfig parse_model_config(const json& j) {
  ModelConfig m;
  const std::string kind =
      detail::as_string(detail::require(j, "kind", "model"), "model.kind");
  if (kind == "theta_logistic") {
    m.kind = ModelKind::theta_logistic;
    auto& c = m.theta_logistic;
    c.trans_var =
        detail::get_double(j, "transition_var", "model", c.trans_var);
    c.obs_var =
        detail::get_double(j, "observation_var", "model", c.obs_var);
    c.init_sd = detail::get_double(j, "init_sd", "model", c.init_sd);
    c.r_max = detail::get_double(j, "r_max", "model", c.r_max);
    c.zeta_min = detail::get_double(j, "zeta_min", "model", c.zeta_min);
    c.zeta_max = detail::get_double(j, "zeta_max", "model", c.zeta_max);
    c.k_max = detail::get_double(j, "k_max", "model", c.k_max);
  } else if (kind == "linear_gaussian") {
    m.kind = ModelKind::linear_gaussian;
    auto& c = m.linear_gaussian;
    c.ar_coeff = detail::get_double(j, "ar_coeff", "model", c.ar_coeff);
    c.state_var = detail::get_double(j, "state_var", "model", c.state_var);
    c.obs_var = detail::get_double(j, "obs_var", "model", c.obs_var);
    c.init_mean = detail::get_double(j, "init_mean", "model", c.init_mean);
    c.init_var = detail::get_double(j, "init_var", "model", c.init_var);
  } else {
    throw ConfigError("model.kind must be 'theta_logistic' or "
                      "'linear_gaussian', got '" + kind + "'");
  }
  return m;
}

inline DataConfig parse_data_config(const json& j) {
  DataConfig d;
  const std::string source =
      detail::as_string(detail::require(j, "source", "data"), "data.source");
  if (source == "simulate") {
    d.source = DataSource::simulate;
    d.n_steps = detail::as_count(detail::require(j, "n_steps", "data"),
                                 "data.n_steps");
    if (const json* t = detail::find(j, "theta")) {
      d.theta = detail::as_double_vec(*t, "data.theta");
    }
    if (const json* s = detail::find(j, "seed")) {
      d.seed = static_cast<std::uint64_t>(detail::as_count(*s, "data.seed"));
    }
  } else if (source == "file") {
    d.source = DataSource::file;
    d.path =
        detail::as_string(detail::require(j, "path", "data"), "data.path");
  } else {
    throw ConfigError("data.source must be 'simulate' or 'file', got '" +
                      source + "'");
  }
  return d;
}

inline FilterConfig parse_filter_config(const json& j) {
  FilterConfig f;
  f.n_particles = detail::get_count(j, "n_particles", "filter", f.n_particles);
  if (const json* r = detail::find(j, "resampling")) {
    const std::string s = detail::as_string(*r, "filter.resampling");
    if (s == "multinomial") {
      f.resampling = Resampling::multinomial;
    } else if (s == "systematic") {
      f.resampling = Resampling::systematic;
    } else {
      throw ConfigError("filter.resampling must be 'multinomial' or "
                        "'systematic', got '" + s + "'");
    }
  }
  if (const json* p = detail::find(j, "prc")) {
    PrcConfig prc;
    const std::string policy = detail::as_string(
        detail::require(*p, "threshold", "filter.prc"), "filter.prc.threshold");
    if (policy == "disabled") {
      prc.policy = ThresholdPolicy::disabled;
    } else if (policy == "fixed") {
      prc.policy = ThresholdPolicy::fixed;
      prc.fixed_c = detail::as_double(
          detail::require(*p, "fixed_c", "filter.prc"), "filter.prc.fixed_c");
    } else if (policy == "quantile") {
      prc.policy = ThresholdPolicy::quantile;
      prc.quantile_alpha =
          detail::get_double(*p, "quantile_alpha", "filter.prc",
                             prc.quantile_alpha);
    } else {
      throw ConfigError("filter.prc.threshold must be 'disabled', 'fixed' or "
                        "'quantile', got '" + policy + "'");
    }
    if (const json* s = detail::find(*p, "scope")) {
      const std::string scope = detail::as_string(*s, "filter.prc.scope");
      if (scope == "move_only") {
        prc.scope = PrcScope::move_only;
      } else if (scope == "ancestor_and_move") {
        prc.scope = PrcScope::ancestor_and_move;
      } else {
        throw ConfigError("filter.prc.scope must be 'move_only' or "
                          "'ancestor_and_move', got '" + scope + "'");
      }
    }
    prc.max_attempts =
        detail::get_count(*p, "max_attempts", "filter.prc", prc.max_attempts);
    prc.r_draws = detail::get_count(*p, "r_estimation_draws", "filter.prc",
                                    prc.r_draws);
    f.prc = prc;
  }
  if (const json* a = detail::find(j, "abc")) {
    AbcConfig abc;
    abc.epsilon = detail::as_double(
        detail::require(*a, "epsilon", "filter.abc"), "filter.abc.epsilon");
    abc.n_pseudo =
        detail::get_count(*a, "n_pseudo", "filter.abc", abc.n_pseudo);
    if (const json* k = detail::find(*a, "kernel")) {
      const std::string kernel = detail::as_string(*k, "filter.abc.kernel");
      if (kernel == "indicator") {
        abc.kernel = AbcKernel::indicator;
      } else if (kernel == "gaussian") {
        abc.kernel = AbcKernel::gaussian;
      } else {
        throw ConfigError("filter.abc.kernel must be 'indicator' or "
                          "'gaussian', got '" + kernel + "'");
      }
    }
    f.abc = abc;
  }
  return f;
}

inline ChainSection parse_chain_section(const json& j) {
  ChainSection c;
  if (const json* a = detail::find(j, "algorithm")) {
    const std::string s = detail::as_string(*a, "chain.algorithm");
    if (s == "pmmh") {
      c.algorithm = Algorithm::pmmh;
    } else if (s == "pg") {
      c.algorithm = Algorithm::pg;
    } else if (s == "hybrid") {
      c.algorithm = Algorithm::hybrid;
    } else {
      throw ConfigError("chain.algorithm must be 'pmmh', 'pg' or 'hybrid', "
                        "got '" + s + "'");
    }
  }
  c.n_iters = detail::get_count(j, "n_iters", "chain", c.n_iters);
  c.mix_prob = detail::get_double(j, "mix_prob", "chain", c.mix_prob);
  c.path_thin = detail::get_count(j, "path_thin", "chain", c.path_thin);
  c.init_retries = detail::get_count(j, "init_retries", "chain",
                                     c.init_retries);
  if (const json* t = detail::find(j, "init_theta")) {
    c.init_theta = detail::as_double_vec(*t, "chain.init_theta");
  }
  if (const json* p = detail::find(j, "init_path_constant")) {
    c.init_path_constant = detail::as_double(*p, "chain.init_path_constant");
  }
  if (const json* p = detail::find(j, "proposal")) {
    c.proposal_given = true;
    const std::string kind = detail::as_string(
        detail::require(*p, "kind", "chain.proposal"), "chain.proposal.kind");
    if (kind == "random_walk") {
      c.proposal.kind = ProposalKind::random_walk;
    } else if (kind == "adaptive") {
      c.proposal.kind = ProposalKind::adaptive_metropolis;
    } else {
      throw ConfigError("chain.proposal.kind must be 'random_walk' or "
                        "'adaptive', got '" + kind + "'");
    }
    c.proposal.sigma0 = detail::as_double_vec(
        detail::require(*p, "sigma0", "chain.proposal"),
        "chain.proposal.sigma0");
    c.proposal.am_start = detail::get_count(*p, "am_start", "chain.proposal",
                                            c.proposal.am_start);
    c.proposal.am_beta = detail::get_double(*p, "am_beta", "chain.proposal",
                                            c.proposal.am_beta);
  }
  return c;
}

inline OracleCheckConfig parse_oracle_check_config(const json& j) {
  OracleCheckConfig o;
  o.ratio_runs = detail::get_count(j, "ratio_runs", "oracle_check",
                                   o.ratio_runs);
  o.ratio_n_steps = detail::get_count(j, "ratio_n_steps", "oracle_check",
                                      o.ratio_n_steps);
  o.ratio_n_particles = detail::get_count(j, "ratio_n_particles",
                                          "oracle_check", o.ratio_n_particles);
  o.ks_iters = detail::get_count(j, "ks_iters", "oracle_check", o.ks_iters);
  o.ks_burn_frac = detail::get_double(j, "ks_burn_frac", "oracle_check",
                                      o.ks_burn_frac);
  o.ks_thin = detail::get_count(j, "ks_thin", "oracle_check", o.ks_thin);
  o.ks_proposal_sd = detail::get_double(j, "ks_proposal_sd", "oracle_check",
                                        o.ks_proposal_sd);
  o.ks_threshold = detail::get_double(j, "ks_threshold", "oracle_check",
                                      o.ks_threshold);
  return o;
}

inline RunConfig parse_config(const json& j) {
  detail::check_keys(j, detail::config_schema(), "");
  RunConfig c;
  if (const json* s = detail::find(j, "seed")) {
    c.seed = static_cast<std::uint64_t>(detail::as_count(*s, "seed"));
  }
  if (const json* o = detail::find(j, "out_dir")) {
    c.out_dir = detail::as_string(*o, "out_dir");
  }
  c.model = parse_model_config(detail::require(j, "model", ""));
  c.data = parse_data_config(detail::require(j, "data", ""));
  c.filter = parse_filter_config(detail::require(j, "filter", ""));
  if (const json* ch = detail::find(j, "chain")) {
    c.chain = parse_chain_section(*ch);
  }
  if (const json* oc = detail::find(j, "oracle_check")) {
    c.oracle = parse_oracle_check_config(*oc);
  }
  c.resolved = j;
  return c;
}

// Presets bundle the two study configurations plus the linear-Gaussian
// ground-truth check. A user config or CLI flags can override any field;
// overrides are merged on top of the preset document.
inline json preset_json(const std::string& name) {
  if (name == "fig2") {
    return json::parse(R"({
      "seed": 1,
      "model": {"kind": "theta_logistic"},
      "data": {"source": "simulate", "n_steps": 100,
               "theta": [0.3, 1.0, 500.0], "seed": 20260816},
      "filter": {"n_particles": 200, "resampling": "multinomial"},
      "chain": {
        "algorithm": "pmmh",
        "n_iters": 100000,
        "path_thin": 10,
        "proposal": {"kind": "adaptive", "sigma0": [0.05, 0.1, 25.0],
                     "am_start": 5000, "am_beta": 0.05}
      }
    })");
  }
  if (name == "fig3") {
    return json::parse(R"({
      "seed": 1,
      "model": {"kind": "theta_logistic"},
      "data": {"source": "simulate", "n_steps": 100,
               "theta": [0.3, 1.0, 500.0], "seed": 20260816},
      "filter": {"n_particles": 200, "resampling": "multinomial"},
      "chain": {
        "algorithm": "pmmh",
        "n_iters": 20000,
        "path_thin": 1,
        "init_theta": [0.5, 1.5, 800.0],
        "init_path_constant": 3.0,
        "proposal": {"kind": "adaptive", "sigma0": [0.05, 0.1, 25.0],
                     "am_start": 5000, "am_beta": 0.05}
      }
    })");
  }
  if (name == "lgcheck") {
    return json::parse(R"({
      "seed": 1,
      "model": {"kind": "linear_gaussian"},
      "data": {"source": "simulate", "n_steps": 50,
               "theta": [0.9], "seed": 20260816},
      "filter": {"n_particles": 200, "resampling": "multinomial"},
      "chain": {
        "algorithm": "pmmh",
        "n_iters": 50000,
        "path_thin": 0,
        "init_theta": [0.0],
        "proposal": {"kind": "random_walk", "sigma0": [0.15]}
      },
      "oracle_check": {
        "ratio_runs": 500, "ratio_n_steps": 25, "ratio_n_particles": 100,
        "ks_iters": 50000, "ks_burn_frac": 0.2, "ks_thin": 10,
        "ks_proposal_sd": 0.15, "ks_threshold": 0.05
      }
    })");
  }
  throw ConfigError("unknown preset '" + name +
                    "' (available: fig2, fig3, lgcheck)");
}

// Overlay wins field by field; nested objects merge recursively.
inline json merge_config(json base, const json& overlay) {
  base.merge_patch(overlay);
  return base;
}

// Runs a callable with the concrete model instance for the configured kind.
template <class F>
auto with_model(const ModelConfig& m, F&& f) {
  if (m.kind == ModelKind::theta_logistic) {
    return f(ThetaLogisticModel(m.theta_logistic));
  }
  return f(LinearGaussianModel(m.linear_gaussian));
}

}  // namespace pmcmc

#endif
