#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lsvbrw/brw_engine.hpp"

namespace lsv {

enum class ExperimentKind {
  Normalize,
  Simulate,
  LimitSample,
  VerifyMax,
  VerifyPP,
  VerifyLemmas,
  VerifyGW,
  Report
};
std::string_view to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_kind(std::string_view s);

enum class ConfigErrorCode {
  UnknownFamily = 10,
  RegimeMismatch = 11,
  MissingSeed = 12,
  InvalidValue = 13,
  UnknownKey = 14,
  MissingFile = 15,
};
std::string_view to_string(ConfigErrorCode c);

struct ConfigError {
  ConfigErrorCode code;
  std::string message;
};

struct OffspringSpec {
  std::string family = "deterministic";  // deterministic | poisson | linear-fractional | explicit
  unsigned d = 2;
  double mean = 2.0;
  double extinction = 0.5;  // linear-fractional
  std::vector<double> pmf;  // explicit
};

struct DisplacementSpec {
  std::string family = "power-log";  // power-log | lognormal | custom-table
  double c = 1.0;
  double beta = 0.5;
  double xi = 1.0 / 3.0;
  double prefactor = 1.0;
  std::string table;  // csv path for custom-table
  std::optional<Regime> declared;
};

/// Every knob of every experiment kind; unused ones are ignored by the runner
/// but echoed into the report.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  unsigned threads = 1;

  OffspringSpec offspring;
  DisplacementSpec displacement;
  std::optional<Regime> regime;  // normalization regime; defaults to the law's

  NormParams norm;  // delta, T, K
  int n = 12;
  std::vector<int> n_list{8, 12, 16};
  std::size_t R = 2000;
  double window_lower = -6.0;
  std::uint64_t node_cap = 100'000'000;

  // limit-sample / verify-pp
  std::vector<double> x_grid{-1.0, 0.0, 1.0};
  std::size_t limit_samples = 100000;
  std::size_t mass_cap = 32;
  double superposition_tv_max = 0.01;
  double marginal_tv_max = 0.01;
  // verify-max / verify-pp thresholds
  double ks_max = 0.05;
  bool require_trend = true;
  double distinct_tv_max = 0.05;
  double mass_tv_max = 0.07;
  // W pools
  std::size_t w_pool = 20000;
  std::uint64_t w_cap = 100000;
  // verify-lemmas
  double gamma = 0.5;
  double slack = 2.0;
  std::vector<double> y_grid{1e4, 1e6, 1e8, 1e10};
  bool tree = true;
  std::vector<int> rare_n{4, 6, 8};
  std::uint64_t rare_samples = 10'000'000;
  double chernoff_gamma = 0.95;
  std::vector<int> chernoff_n{25, 50, 100, 200, 400, 800};
  // verify-gw
  std::size_t gw_samples = 100000;
  std::size_t selfsim_samples = 10000;
  double cluster_tv_max = 0.01;
  double w_ks_max = 0.02;

  OffspringLaw make_offspring() const;
  DisplacementLaw make_displacement() const;
  Regime pipeline_regime() const;
  BRWConfig make_brw(int generation) const;
  nlohmann::json to_json() const;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty(); }
};

/// INI file with sections [experiment], [offspring], [displacement],
/// [normalization], [simulation], [limit], [verify]. Overrides are
/// "section.key=value" and win over the file. Collects every violation.
ConfigResult parse_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides = {});

}  // namespace lsv
