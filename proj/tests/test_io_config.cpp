#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pmcmc/config.hpp"
#include "pmcmc/io.hpp"
#include "pmcmc/linear_gaussian.hpp"
#include "pmcmc/samplers.hpp"

using namespace pmcmc;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

struct FileGuard {
  std::filesystem::path path;
  ~FileGuard() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace

TEST_CASE("dataset files round-trip every bit", "[io]") {
  LinearGaussianModel model(LinearGaussianParams{0.9, 1.0, 1.0, 0.0, 1.0});
  const std::vector<double> theta = {0.9};
  const auto data = simulate(model, theta, 10, 130);

  const auto path = tmp_file("pmcmc_test_dataset.csv");
  FileGuard guard{path};
  write_dataset_csv(path.string(), data);
  const auto back = read_dataset_csv(path.string());
  REQUIRE(back.x == data.x);
  REQUIRE(back.y == data.y);
}

TEST_CASE("dataset reader rejects malformed input", "[io]") {
  SECTION("missing file") {
    REQUIRE_THROWS_AS(read_dataset_csv("/nonexistent/nowhere.csv"),
                      std::runtime_error);
  }
  SECTION("wrong header") {
    const auto path = tmp_file("pmcmc_test_badheader.csv");
    FileGuard guard{path};
    std::ofstream(path) << "a,b,c\n1,2,3\n";
    REQUIRE_THROWS_AS(read_dataset_csv(path.string()), std::runtime_error);
  }
  SECTION("no rows") {
    const auto path = tmp_file("pmcmc_test_empty.csv");
    FileGuard guard{path};
    std::ofstream(path) << "n,x_true,y\n";
    REQUIRE_THROWS_AS(read_dataset_csv(path.string()), std::runtime_error);
  }
  SECTION("short row") {
    const auto path = tmp_file("pmcmc_test_shortrow.csv");
    FileGuard guard{path};
    std::ofstream(path) << "n,x_true,y\n1,2\n";
    REQUIRE_THROWS_AS(read_dataset_csv(path.string()), std::runtime_error);
  }
}

TEST_CASE("chain files round-trip every stored column", "[io]") {
  LinearGaussianModel model(LinearGaussianParams{0.9, 1.0, 1.0, 0.0, 1.0});
  const std::vector<double> theta = {0.5};
  const auto data = simulate(model, theta, 5, 131);

  FilterConfig fc;
  fc.n_particles = 10;

  ChainConfig cc;
  cc.n_iters = 20;
  cc.path_thin = 5;
  cc.proposal.kind = ProposalKind::random_walk;
  cc.proposal.sigma0 = {0.15};
  cc.init_theta = theta;

  const auto out = run_chain(model, data.y, fc, cc, 132);
  const auto path = tmp_file("pmcmc_test_chain.csv");
  FileGuard guard{path};
  write_chain_csv(path.string(), out);
  const auto back = read_chain_csv(path.string());

  REQUIRE(back.n_iters == out.n_iters);
  REQUIRE(back.theta_dim == out.theta_dim);
  REQUIRE(back.path_len == out.path_len);
  REQUIRE(back.thetas == out.thetas);
  REQUIRE(back.log_mls == out.log_mls);
  REQUIRE(back.log_priors == out.log_priors);
  REQUIRE(back.accept_flags == out.accept_flags);
  REQUIRE(back.path_iters == out.path_iters);
  REQUIRE(back.paths == out.paths);
}

TEST_CASE("chain reader rejects malformed input", "[io]") {
  SECTION("wrong header") {
    const auto path = tmp_file("pmcmc_test_chain_bad.csv");
    FileGuard guard{path};
    std::ofstream(path) << "iteration,stuff\n";
    REQUIRE_THROWS_AS(read_chain_csv(path.string()), std::runtime_error);
  }
  SECTION("missing theta columns") {
    const auto path = tmp_file("pmcmc_test_chain_notheta.csv");
    FileGuard guard{path};
    std::ofstream(path) << "iter,accepted,log_ml,log_prior\n";
    REQUIRE_THROWS_AS(read_chain_csv(path.string()), std::runtime_error);
  }
  SECTION("ragged row") {
    const auto path = tmp_file("pmcmc_test_chain_ragged.csv");
    FileGuard guard{path};
    std::ofstream(path)
        << "iter,accepted,log_ml,log_prior,theta_1\n1,1,-3.5\n";
    REQUIRE_THROWS_AS(read_chain_csv(path.string()), std::runtime_error);
  }
}

TEST_CASE("trace files round-trip the whole grid", "[io]") {
  LinearGaussianModel model(LinearGaussianParams{0.9, 1.0, 1.0, 0.0, 1.0});
  const std::vector<double> theta = {0.9};
  const auto data = simulate(model, theta, 6, 133);

  FilterConfig fc;
  fc.n_particles = 5;

  RngStream rng(134);
  const auto ps = run_filter(model, theta, data.y, fc, rng);

  const auto path = tmp_file("pmcmc_test_trace.csv");
  FileGuard guard{path};
  write_trace_csv(path.string(), ps);
  const auto back = read_trace_csv(path.string());

  REQUIRE(back.n_steps == ps.n_steps);
  REQUIRE(back.n_particles == ps.n_particles);
  REQUIRE(back.particles == ps.particles);
  REQUIRE(back.log_weights == ps.log_weights);
  for (std::size_t k = 0; k < ps.n_particles; ++k) {
    REQUIRE(back.ancestors[k] == 0);  // first step has no parent
  }
  for (std::size_t n = 1; n < ps.n_steps; ++n) {
    for (std::size_t k = 0; k < ps.n_particles; ++k) {
      REQUIRE(back.ancestors[n * ps.n_particles + k] ==
              ps.ancestor(n, k) + 1);  // file indices are 1-based
    }
  }
}

TEST_CASE("collapsed traces stop at the collapse step", "[io]") {
  ParticleSystem ps;
  ps.allocate(3, 2);
  ps.particles[0] = 0.4;
  ps.particles[1] = -0.2;
  ps.log_weights[0] = neg_inf;
  ps.log_weights[1] = neg_inf;
  ps.collapsed_at = 0;
  ps.log_ml = neg_inf;

  const auto path = tmp_file("pmcmc_test_trace_collapsed.csv");
  FileGuard guard{path};
  write_trace_csv(path.string(), ps);
  const auto back = read_trace_csv(path.string());
  REQUIRE(back.n_steps == 1);
  REQUIRE(back.n_particles == 2);
  REQUIRE(back.particles == std::vector<double>{0.4, -0.2});
  REQUIRE(back.log_weights[0] == neg_inf);
  REQUIRE(back.log_weights[1] == neg_inf);
}

TEST_CASE("study presets carry their pinned settings", "[config]") {
  SECTION("posterior study") {
    const auto cfg = parse_config(preset_json("fig2"));
    REQUIRE(cfg.model.kind == ModelKind::theta_logistic);
    REQUIRE(cfg.data.source == DataSource::simulate);
    REQUIRE(cfg.data.n_steps == 100);
    REQUIRE(cfg.data.theta.has_value());
    REQUIRE(*cfg.data.theta == std::vector<double>{0.3, 1.0, 500.0});
    REQUIRE(cfg.data.seed.has_value());
    REQUIRE(*cfg.data.seed == 20260816);
    REQUIRE(cfg.filter.n_particles == 200);
    REQUIRE(cfg.filter.resampling == Resampling::multinomial);
    REQUIRE(cfg.chain.algorithm == Algorithm::pmmh);
    REQUIRE(cfg.chain.n_iters == 100000);
    REQUIRE(cfg.chain.path_thin == 10);
    REQUIRE(cfg.chain.proposal.kind == ProposalKind::adaptive_metropolis);
    REQUIRE(cfg.chain.proposal.sigma0 == std::vector<double>{0.05, 0.1, 25.0});
    REQUIRE(cfg.chain.proposal.am_start == 5000);
    REQUIRE(cfg.chain.proposal.am_beta == 0.05);
  }
  SECTION("unlikely-initialization study") {
    const auto cfg = parse_config(preset_json("fig3"));
    REQUIRE(cfg.chain.algorithm == Algorithm::pmmh);
    REQUIRE(cfg.chain.n_iters == 20000);
    REQUIRE(cfg.chain.path_thin == 1);
    REQUIRE(cfg.chain.init_theta.has_value());
    REQUIRE(*cfg.chain.init_theta == std::vector<double>{0.5, 1.5, 800.0});
    REQUIRE(cfg.chain.init_path_constant.has_value());
    REQUIRE(*cfg.chain.init_path_constant == 3.0);
  }
  SECTION("ground-truth check") {
    const auto cfg = parse_config(preset_json("lgcheck"));
    REQUIRE(cfg.model.kind == ModelKind::linear_gaussian);
    REQUIRE(cfg.oracle.ratio_runs == 500);
    REQUIRE(cfg.oracle.ratio_n_steps == 25);
    REQUIRE(cfg.oracle.ratio_n_particles == 100);
    REQUIRE(cfg.oracle.ks_iters == 50000);
    REQUIRE(cfg.oracle.ks_threshold == 0.05);
  }
  SECTION("unknown preset") {
    REQUIRE_THROWS_AS(preset_json("fig9"), ConfigError);
  }
}

TEST_CASE("unknown keys are reported with their dotted path", "[config]") {
  auto doc = preset_json("fig2");
  SECTION("top level") {
    doc["bogus"] = 1;
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("unknown config key: bogus"));
  }
  SECTION("nested") {
    doc["filter"]["prc"] = {{"threshold", "disabled"}, {"wrong_knob", 2}};
    REQUIRE_THROWS_WITH(
        parse_config(doc),
        ContainsSubstring("unknown config key: filter.prc.wrong_knob"));
  }
}

TEST_CASE("missing required fields are reported by name", "[config]") {
  SECTION("model.kind") {
    const json doc = {{"model", json::object()},
                      {"data", {{"source", "simulate"}, {"n_steps", 10}}},
                      {"filter", json::object()}};
    REQUIRE_THROWS_WITH(parse_config(doc), ContainsSubstring("model.kind"));
  }
  SECTION("data.n_steps") {
    const json doc = {{"model", {{"kind", "theta_logistic"}}},
                      {"data", {{"source", "simulate"}}},
                      {"filter", json::object()}};
    REQUIRE_THROWS_WITH(parse_config(doc), ContainsSubstring("data.n_steps"));
  }
  SECTION("data.path") {
    const json doc = {{"model", {{"kind", "theta_logistic"}}},
                      {"data", {{"source", "file"}}},
                      {"filter", json::object()}};
    REQUIRE_THROWS_WITH(parse_config(doc), ContainsSubstring("data.path"));
  }
  SECTION("chain.proposal.sigma0") {
    json doc = preset_json("fig2");
    doc["chain"]["proposal"].erase("sigma0");
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("chain.proposal.sigma0"));
  }
  SECTION("top-level sections") {
    REQUIRE_THROWS_WITH(parse_config(json::object()),
                        ContainsSubstring("model"));
  }
}

TEST_CASE("enumerated fields reject unknown values", "[config]") {
  auto doc = preset_json("fig2");
  SECTION("model kind") {
    doc["model"]["kind"] = "pendulum";
    REQUIRE_THROWS_WITH(parse_config(doc), ContainsSubstring("model.kind"));
  }
  SECTION("resampling scheme") {
    doc["filter"]["resampling"] = "residual";
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("filter.resampling"));
  }
  SECTION("chain algorithm") {
    doc["chain"]["algorithm"] = "gibbs";
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("chain.algorithm"));
  }
  SECTION("threshold policy") {
    doc["filter"]["prc"] = {{"threshold", "median"}};
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("filter.prc.threshold"));
  }
  SECTION("kernel") {
    doc["filter"]["abc"] = {{"epsilon", 0.5}, {"kernel", "cauchy"}};
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("filter.abc.kernel"));
  }
  SECTION("proposal kind") {
    doc["chain"]["proposal"]["kind"] = "langevin";
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("chain.proposal.kind"));
  }
  SECTION("negative counts") {
    doc["seed"] = -1;
    REQUIRE_THROWS_WITH(parse_config(doc),
                        ContainsSubstring("non-negative integer"));
  }
}

TEST_CASE("overrides merge field by field", "[config]") {
  const auto base = preset_json("fig2");
  const json overlay = {{"chain", {{"n_iters", 50}}},
                        {"filter", {{"n_particles", 20}}}};
  const auto cfg = parse_config(merge_config(base, overlay));
  REQUIRE(cfg.chain.n_iters == 50);
  REQUIRE(cfg.filter.n_particles == 20);
  // untouched siblings survive the merge
  REQUIRE(cfg.chain.path_thin == 10);
  REQUIRE(cfg.chain.proposal.kind == ProposalKind::adaptive_metropolis);
  REQUIRE(cfg.data.n_steps == 100);

  // null removes a field, uncovering the default
  const json erase_algo = {{"chain", {{"algorithm", nullptr}}}};
  const auto cleared = parse_config(merge_config(base, erase_algo));
  REQUIRE_FALSE(cleared.chain.algorithm.has_value());
}

TEST_CASE("model dispatch hands the callable the right type", "[config]") {
  ModelConfig tl;
  tl.kind = ModelKind::theta_logistic;
  const auto tl_dim =
      with_model(tl, [](const auto& model) { return model.param_dim; });
  REQUIRE(tl_dim == 3);

  ModelConfig lg;
  lg.kind = ModelKind::linear_gaussian;
  const auto lg_dim =
      with_model(lg, [](const auto& model) { return model.param_dim; });
  REQUIRE(lg_dim == 1);

  // parameters reach the constructed instance
  ModelConfig tuned;
  tuned.kind = ModelKind::linear_gaussian;
  tuned.linear_gaussian.ar_coeff = 0.42;
  const auto phi = with_model(tuned, [](const auto& model) -> double {
    if constexpr (requires { model.params(); }) {
      return model.params().ar_coeff;
    } else {
      return 0.0;
    }
  });
  REQUIRE(phi == 0.42);
}
