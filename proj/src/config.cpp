#include "lsvbrw/config.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace pt = boost::property_tree;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::Normalize, "normalize"},       {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::LimitSample, "limit-sample"},  {ExperimentKind::VerifyMax, "verify-max"},
    {ExperimentKind::VerifyPP, "verify-pp"},        {ExperimentKind::VerifyLemmas, "verify-lemmas"},
    {ExperimentKind::VerifyGW, "verify-gw"},        {ExperimentKind::Report, "report"},
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"experiment", {"kind", "seed", "out", "threads"}},
      {"offspring", {"family", "d", "mean", "extinction", "pmf"}},
      {"displacement", {"family", "c", "beta", "xi", "prefactor", "table", "regime"}},
      {"normalization", {"regime", "delta", "T", "K"}},
      {"simulation", {"n", "n_list", "R", "window_lower", "node_cap"}},
      {"limit",
       {"x_grid", "samples", "mass_cap", "superposition_tv_max", "marginal_tv_max", "w_pool",
        "w_cap"}},
      {"verify",
       {"ks_max", "require_trend", "distinct_tv_max", "mass_tv_max", "gamma", "slack", "y_grid",
        "tree", "rare_n", "rare_samples", "chernoff_gamma", "chernoff_n", "gw_samples",
        "selfsim_samples", "cluster_tv_max", "w_ks_max"}},
  };
  return k;
}

std::optional<Regime> parse_regime(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "suplog" || s == "suplogarithmic") return Regime::Suplogarithmic;
  if (s == "sublog" || s == "sublogarithmic") return Regime::Sublogarithmic;
  return std::nullopt;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::vector<ConfigError>& errors) : t_(tree), errors_(errors) {}

  std::optional<std::string> raw(const std::string& key) const {
    auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const auto v = raw(key);
    if (!v) return;
    if (!parse(*v, out)) bad(key, *v);
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& out) {
    const auto v = raw(key);
    if (!v) return;
    std::vector<T> items;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      T x{};
      if (!parse(trim(item), x)) {
        bad(key, *v);
        return;
      }
      items.push_back(x);
    }
    if (items.empty()) {
      bad(key, *v);
      return;
    }
    out = std::move(items);
  }

 private:
  void bad(const std::string& key, const std::string& v) {
    errors_.push_back({ConfigErrorCode::InvalidValue, "invalid value for " + key + ": '" + v + "'"});
  }

  static bool parse(const std::string& s, std::string& out) {
    out = s;
    return true;
  }
  static bool parse(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes") return out = true, true;
    if (s == "false" || s == "0" || s == "no") return out = false, true;
    return false;
  }
  static bool parse(const std::string& s, double& out) {
    try {
      std::size_t pos = 0;
      out = std::stod(s, &pos);
      return pos == s.size();
    } catch (...) {
      return false;
    }
  }
  template <class I>
    requires std::is_integral_v<I>
  static bool parse(const std::string& s, I& out) {
    // Integers may be written as 1e7.
    double d = 0.0;
    if (!parse(s, d) || d != std::floor(d)) return false;
    if (d < static_cast<double>(std::numeric_limits<I>::min()) ||
        d > static_cast<double>(std::numeric_limits<I>::max()))
      return false;
    out = static_cast<I>(d);
    return true;
  }

  const pt::ptree& t_;
  std::vector<ConfigError>& errors_;
};

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKinds)
    if (kind == k) return name;
  return "?";
}

std::optional<ExperimentKind> parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kKinds)
    if (name == s) return kind;
  return std::nullopt;
}

std::string_view to_string(ConfigErrorCode c) {
  switch (c) {
    case ConfigErrorCode::UnknownFamily: return "unknown-family";
    case ConfigErrorCode::RegimeMismatch: return "regime-mismatch";
    case ConfigErrorCode::MissingSeed: return "missing-seed";
    case ConfigErrorCode::InvalidValue: return "invalid-value";
    case ConfigErrorCode::UnknownKey: return "unknown-key";
    case ConfigErrorCode::MissingFile: return "missing-file";
  }
  return "?";
}

OffspringLaw ExperimentConfig::make_offspring() const {
  const auto& o = offspring;
  if (o.family == "deterministic") return OffspringLaw::deterministic(o.d);
  if (o.family == "poisson") return OffspringLaw::poisson(o.mean);
  if (o.family == "linear-fractional") return OffspringLaw::linear_fractional_with(o.mean, o.extinction);
  if (o.family == "explicit") return OffspringLaw::explicit_pmf(o.pmf);
  throw Error("unknown offspring family: " + o.family);
}

DisplacementLaw ExperimentConfig::make_displacement() const {
  const auto& d = displacement;
  if (d.family == "power-log") {
    auto law = DisplacementLaw::make(TailFunction::power_log(d.c, d.beta, d.xi), d.prefactor);
    if (d.declared && *d.declared != law.regime)
      throw Error("regime mismatch: power-log with beta " + std::to_string(d.beta) + " is " +
                  std::string(to_string(law.regime)));
    return law;
  }
  if (d.family == "lognormal") {
    auto law = DisplacementLaw::make(TailFunction::lognormal(d.xi), d.prefactor);
    if (d.declared && *d.declared != law.regime) throw Error("regime mismatch: lognormal is suplog");
    return law;
  }
  if (d.family == "custom-table") {
    if (!d.declared) throw Error("custom-table displacement needs displacement.regime");
    return DisplacementLaw::make(TailFunction::custom_table_csv(d.table, d.xi), d.prefactor,
                                 *d.declared);
  }
  throw Error("unknown displacement family: " + d.family);
}

Regime ExperimentConfig::pipeline_regime() const {
  return regime ? *regime : make_displacement().regime;
}

BRWConfig ExperimentConfig::make_brw(int generation) const {
  BRWConfig c{make_offspring(), make_displacement(), generation, pipeline_regime()};
  c.window_lower = window_lower;
  c.line_params = norm;
  c.node_cap = node_cap;
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = {{"kind", to_string(kind)}, {"seed", seed ? nlohmann::json(*seed) : nullptr}};
  j["offspring"] = {{"family", offspring.family}};
  if (offspring.family == "deterministic") j["offspring"]["d"] = offspring.d;
  if (offspring.family == "poisson") j["offspring"]["mean"] = offspring.mean;
  if (offspring.family == "linear-fractional") {
    j["offspring"]["mean"] = offspring.mean;
    j["offspring"]["extinction"] = offspring.extinction;
  }
  if (offspring.family == "explicit") j["offspring"]["pmf"] = offspring.pmf;
  j["displacement"] = {{"family", displacement.family},
                       {"xi", displacement.xi},
                       {"prefactor", displacement.prefactor}};
  if (displacement.family == "power-log") {
    j["displacement"]["c"] = displacement.c;
    j["displacement"]["beta"] = displacement.beta;
  }
  if (displacement.family == "custom-table") j["displacement"]["table"] = displacement.table;
  try {
    j["normalization"]["regime"] = to_string(pipeline_regime());
  } catch (const Error&) {
    j["normalization"]["regime"] = nullptr;
  }
  j["normalization"]["delta"] = norm.delta;
  j["normalization"]["T"] = norm.T;
  j["normalization"]["K"] = norm.K;
  j["simulation"] = {{"n", n},
                     {"n_list", n_list},
                     {"R", R},
                     {"window_lower", window_lower},
                     {"node_cap", node_cap}};
  j["limit"] = {{"x_grid", x_grid},
                {"samples", limit_samples},
                {"mass_cap", mass_cap},
                {"superposition_tv_max", superposition_tv_max},
                {"marginal_tv_max", marginal_tv_max},
                {"w_pool", w_pool},
                {"w_cap", w_cap}};
  j["verify"] = {{"ks_max", ks_max},
                 {"require_trend", require_trend},
                 {"distinct_tv_max", distinct_tv_max},
                 {"mass_tv_max", mass_tv_max},
                 {"gamma", gamma},
                 {"slack", slack},
                 {"y_grid", y_grid},
                 {"tree", tree},
                 {"rare_n", rare_n},
                 {"rare_samples", rare_samples},
                 {"chernoff_gamma", chernoff_gamma},
                 {"chernoff_n", chernoff_n},
                 {"gw_samples", gw_samples},
                 {"selfsim_samples", selfsim_samples},
                 {"cluster_tv_max", cluster_tv_max},
                 {"w_ks_max", w_ks_max}};
  return j;
}

ConfigResult parse_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides) {
  ConfigResult res;
  auto& errors = res.errors;
  pt::ptree tree;
  if (path) {
    if (!std::filesystem::exists(*path)) {
      errors.push_back({ConfigErrorCode::MissingFile, "config file not found: " + path->string()});
      return res;
    }
    try {
      pt::read_ini(path->string(), tree);
    } catch (const pt::ini_parser_error& e) {
      errors.push_back({ConfigErrorCode::InvalidValue, std::string("malformed config: ") + e.what()});
      return res;
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      errors.push_back({ConfigErrorCode::InvalidValue, "override must be section.key=value: " + o});
      continue;
    }
    tree.put(pt::ptree::path_type(trim(o.substr(0, eq)), '.'), trim(o.substr(eq + 1)));
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      errors.push_back({ConfigErrorCode::UnknownKey, "unknown section [" + section + "]"});
      continue;
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        errors.push_back({ConfigErrorCode::UnknownKey, "unknown key " + section + "." + key});
  }

  ExperimentConfig c;
  Reader r(tree, errors);
  if (const auto k = r.raw("experiment.kind")) {
    if (const auto kind = parse_kind(*k))
      c.kind = *kind;
    else
      errors.push_back({ConfigErrorCode::InvalidValue, "unknown experiment kind: " + *k});
  }
  if (r.raw("experiment.seed")) {
    std::uint64_t s = 0;
    const std::size_t before = errors.size();
    r.get("experiment.seed", s);
    if (errors.size() == before) c.seed = s;
  }
  std::string out;
  r.get("experiment.out", out);
  if (!out.empty()) c.out = out;
  r.get("experiment.threads", c.threads);
  if (c.threads == 0) errors.push_back({ConfigErrorCode::InvalidValue, "threads must be >= 1"});

  r.get("offspring.family", c.offspring.family);
  r.get("offspring.d", c.offspring.d);
  r.get("offspring.mean", c.offspring.mean);
  r.get("offspring.extinction", c.offspring.extinction);
  r.get_list("offspring.pmf", c.offspring.pmf);

  r.get("displacement.family", c.displacement.family);
  r.get("displacement.c", c.displacement.c);
  r.get("displacement.beta", c.displacement.beta);
  r.get("displacement.xi", c.displacement.xi);
  r.get("displacement.prefactor", c.displacement.prefactor);
  r.get("displacement.table", c.displacement.table);
  if (const auto v = r.raw("displacement.regime")) {
    c.displacement.declared = parse_regime(*v);
    if (!c.displacement.declared)
      errors.push_back({ConfigErrorCode::InvalidValue, "unknown regime: " + *v});
  }
  if (const auto v = r.raw("normalization.regime")) {
    c.regime = parse_regime(*v);
    if (!c.regime) errors.push_back({ConfigErrorCode::InvalidValue, "unknown regime: " + *v});
  }
  r.get("normalization.delta", c.norm.delta);
  r.get("normalization.T", c.norm.T);
  r.get("normalization.K", c.norm.K);

  r.get("simulation.n", c.n);
  r.get_list("simulation.n_list", c.n_list);
  r.get("simulation.R", c.R);
  r.get("simulation.window_lower", c.window_lower);
  r.get("simulation.node_cap", c.node_cap);

  r.get_list("limit.x_grid", c.x_grid);
  r.get("limit.samples", c.limit_samples);
  r.get("limit.mass_cap", c.mass_cap);
  r.get("limit.superposition_tv_max", c.superposition_tv_max);
  r.get("limit.marginal_tv_max", c.marginal_tv_max);
  r.get("limit.w_pool", c.w_pool);
  r.get("limit.w_cap", c.w_cap);

  r.get("verify.ks_max", c.ks_max);
  r.get("verify.require_trend", c.require_trend);
  r.get("verify.distinct_tv_max", c.distinct_tv_max);
  r.get("verify.mass_tv_max", c.mass_tv_max);
  r.get("verify.gamma", c.gamma);
  r.get("verify.slack", c.slack);
  r.get_list("verify.y_grid", c.y_grid);
  r.get("verify.tree", c.tree);
  r.get_list("verify.rare_n", c.rare_n);
  r.get("verify.rare_samples", c.rare_samples);
  r.get("verify.chernoff_gamma", c.chernoff_gamma);
  r.get_list("verify.chernoff_n", c.chernoff_n);
  r.get("verify.gw_samples", c.gw_samples);
  r.get("verify.selfsim_samples", c.selfsim_samples);
  r.get("verify.cluster_tv_max", c.cluster_tv_max);
  r.get("verify.w_ks_max", c.w_ks_max);

  if (!c.seed && c.kind != ExperimentKind::Report)
    errors.push_back({ConfigErrorCode::MissingSeed, "seed required"});

  if (c.kind != ExperimentKind::Report) {
    static const std::set<std::string> offspring_families = {"deterministic", "poisson",
                                                             "linear-fractional", "explicit"};
    static const std::set<std::string> displacement_families = {"power-log", "lognormal",
                                                                "custom-table"};
    bool laws_named = true;
    if (!offspring_families.count(c.offspring.family)) {
      errors.push_back({ConfigErrorCode::UnknownFamily, "unknown offspring family: " + c.offspring.family});
      laws_named = false;
    }
    if (!displacement_families.count(c.displacement.family)) {
      errors.push_back(
          {ConfigErrorCode::UnknownFamily, "unknown displacement family: " + c.displacement.family});
      laws_named = false;
    }
    if (laws_named) {
      try {
        (void)c.make_offspring();
      } catch (const Error& e) {
        errors.push_back({ConfigErrorCode::InvalidValue, std::string("offspring: ") + e.what()});
      }
      try {
        const DisplacementLaw law = c.make_displacement();
        if (c.regime && *c.regime != law.regime)
          errors.push_back({ConfigErrorCode::RegimeMismatch,
                            "regime mismatch: normalization is " + std::string(to_string(*c.regime)) +
                                ", displacement law is " + std::string(to_string(law.regime))});
      } catch (const Error& e) {
        const std::string msg = e.what();
        const auto code = msg.rfind("regime mismatch", 0) == 0 ? ConfigErrorCode::RegimeMismatch
                                                               : ConfigErrorCode::InvalidValue;
        errors.push_back({code, std::string("displacement: ") + msg});
      }
    }
    if (c.n < 1) errors.push_back({ConfigErrorCode::InvalidValue, "simulation.n must be >= 1"});
    if (c.R < 1) errors.push_back({ConfigErrorCode::InvalidValue, "simulation.R must be >= 1"});
    if (!(c.norm.delta > 0.0 && c.norm.delta < 1.0))
      errors.push_back({ConfigErrorCode::InvalidValue, "normalization.delta must lie in (0, 1)"});
    if (!(c.gamma > 0.0 && c.gamma < 1.0))
      errors.push_back({ConfigErrorCode::InvalidValue, "verify.gamma must lie in (0, 1)"});
  }

  if (errors.empty()) res.config = std::move(c);
  return res;
}

}  // namespace lsv
