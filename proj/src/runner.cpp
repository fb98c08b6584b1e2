#include "lsvbrw/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lsvbrw/error.hpp"
#include "lsvbrw/io.hpp"
#include "lsvbrw/limit_laws.hpp"
#include "lsvbrw/verify.hpp"

namespace lsv {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fd(double x) { return format_double(x); }

json ks_json(const KSResult& k) {
  json j = {{"sample_size", k.sample_size},
            {"statistic", k.statistic},
            {"band_5", k.band_5},
            {"band_1", k.band_1},
            {"within_band_1", k.pass}};
  if (k.reference_size) j["reference_size"] = k.reference_size;
  return j;
}

ExperimentOptions options(const ExperimentConfig& c) {
  ExperimentOptions o;
  o.R = c.R;
  o.threads = c.threads;
  o.seed = *c.seed;
  o.w_pool = c.w_pool;
  o.w_cap = c.w_cap;
  return o;
}

json window_json(const ExperimentConfig& c) {
  return {{"lower", c.window_lower},
          {"scale", c.pipeline_regime() == Regime::Suplogarithmic ? "(V - b_n)/a_n" : "L(V) - n log m"}};
}

struct Result {
  bool pass = true;
  json body;
};

// normalize --------------------------------------------------------------

Result run_normalize(const ExperimentConfig& c, ArtifactDir& dir) {
  const DisplacementLaw law = c.make_displacement();
  const double m = c.make_offspring().mean();
  Result r;
  const ValidationReport v = validate_assumptions(law);
  json checks = json::array();
  for (const auto& ch : v.checks) checks.push_back({{"name", ch.name}, {"status", to_string(ch.status)}});
  r.body["assumptions"] = checks;
  r.pass = v.ok();

  std::ostringstream csv;
  if (c.pipeline_regime() == Regime::Suplogarithmic) {
    csv << "n,b,a,y,z,x\n";
    std::vector<NormSeq> rows;
    for (int n = 1; n <= c.n; ++n) {
      rows.push_back(compute_norm_seq(law, m, n, c.norm));
      const auto& s = rows.back();
      csv << n << ',' << fd(s.b) << ',' << fd(s.a) << ',' << fd(s.y) << ',' << fd(s.z) << ','
          << fd(s.x) << '\n';
    }
    const auto inv = check_norm_invariants(rows);
    r.body["invariants"] = {{"b_increasing", inv.b_increasing},
                            {"a_positive", inv.a_positive},
                            {"z_over_b_decreasing", inv.z_over_b_decreasing},
                            {"a_over_z_decreasing_diagnostic", inv.a_over_z_decreasing}};
    r.pass = r.pass && inv.b_increasing && inv.a_positive && inv.z_over_b_decreasing;
  } else {
    csv << "n,level,log_inverse_level\n";
    for (int n = 1; n <= c.n; ++n) {
      const double level = sublog_level(m, n);
      csv << n << ',' << fd(level) << ',' << fd(law.tail.log_inverse(level)) << '\n';
    }
  }
  dir.write_text("normalization.csv", csv.str());
  return r;
}

// simulate ---------------------------------------------------------------

json snapshot_json(std::size_t index, const ReplicateOutcome& rep) {
  if (rep.cap_exceeded) return {{"replicate", index}, {"cap_exceeded", true}};
  const auto& s = *rep.snapshot;
  json line = json::array();
  for (const auto& l : s.line) line.push_back({{"depth", l.depth}, {"X", l.displacement}, {"E", l.descendants}});
  return {{"replicate", index},
          {"n", s.n},
          {"Z_n", s.Z_n},
          {"M_n", s.M_n},
          {"T_max", s.T_max},
          {"V_atoms", s.V_atoms},
          {"T_atoms", s.T_atoms},
          {"line", line},
          {"diagnostics",
           {{"negligible_above", s.negligible_above},
            {"a3_above", s.a3_above},
            {"a2_empty", s.a2_empty},
            {"multi_crossing", s.multi_crossing},
            {"gap_max", s.gap_max ? json(*s.gap_max) : json(nullptr)},
            {"nodes", s.nodes_visited}}}};
}

Result run_simulate(const ExperimentConfig& c, ArtifactDir& dir) {
  const BRWConfig cfg = c.make_brw(c.n);
  const Scale scale = make_scale(cfg);
  const BatchResult batch = batch_simulate(cfg, scale, c.R, c.threads, derive_seed(*c.seed, 0x5133));

  std::string jsonl;
  for (std::size_t i = 0; i < batch.replicates.size(); ++i)
    jsonl += snapshot_json(i, batch.replicates[i]).dump() + "\n";
  dir.write_text("snapshots.jsonl", jsonl);

  const auto& s = batch.summary;
  std::ostringstream csv;
  csv << "replicates,survivors,flagged,mean_Z_n,M_q05,M_q25,M_q50,M_q75,M_q95\n";
  csv << s.replicates << ',' << s.survivors << ',' << s.flagged << ',' << fd(s.mean_Z_n);
  for (double q : s.M_n_quantiles) csv << ',' << fd(q);
  csv << '\n';
  dir.write_text("summary.csv", csv.str());

  // Stopping-line identity on every replicate, f = indicator above the floor.
  const double line_norm = std::holds_alternative<NormSeq>(scale)
                               ? -std::get<NormSeq>(scale).z / std::get<NormSeq>(scale).a
                               : -0.25 * std::get<SublogScale>(scale).level;
  const double floor = std::max(cfg.window_lower, line_norm);
  const StepFunction f = StepFunction::indicator_above(floor);
  std::size_t applicable = 0, not_applicable = 0, a2_violations = 0;
  double worst = 0.0;
  std::vector<double> gaps;
  for (const auto& rep : batch.replicates) {
    if (!rep.snapshot) continue;
    const auto& snap = *rep.snapshot;
    if (!snap.a2_empty) ++a2_violations;
    if (snap.gap_max)
      gaps.push_back(std::holds_alternative<NormSeq>(scale) ? *snap.gap_max / std::get<NormSeq>(scale).a
                                                            : *snap.gap_max);
    const IdentityCheck id = stopping_line_identity_check(snap, f, cfg, scale);
    if (!id.applicable) {
      ++not_applicable;
      continue;
    }
    ++applicable;
    const double den = std::max({std::abs(id.lhs), std::abs(id.rhs), 1.0});
    worst = std::max(worst, std::abs(id.lhs - id.rhs) / den);
  }
  std::sort(gaps.begin(), gaps.end());

  Result r;
  r.body["window"] = window_json(c);
  r.body["summary"] = {{"replicates", s.replicates},
                       {"survivors", s.survivors},
                       {"flagged", s.flagged},
                       {"mean_Z_n", s.mean_Z_n},
                       {"M_n_quantiles", s.M_n_quantiles}};
  r.body["stopping_line_identity"] = {{"test_function_floor", floor},
                                      {"applicable", applicable},
                                      {"not_applicable", not_applicable},
                                      {"max_relative_discrepancy", worst}};
  r.body["negligible_sets"] = {{"a2_nonempty_replicates", a2_violations},
                               {"median_gap", gaps.empty() ? json(nullptr) : json(gaps[gaps.size() / 2])}};
  r.pass = worst <= 1e-9;
  if (s.flagged > 0)
    throw Error("node cap exceeded in " + std::to_string(s.flagged) + " of " +
                std::to_string(s.replicates) + " replicates");
  return r;
}

// limit-sample -----------------------------------------------------------

Result run_limit_sample(const ExperimentConfig& c, ArtifactDir& dir) {
  const OffspringLaw law = c.make_offspring();
  const ClusterLaw cluster = compute_cluster_law(law);
  const ExperimentOptions opt = options(c);
  const WRepresentation w = experiment_W(law, opt, 0x57);
  const double lo = *std::min_element(c.x_grid.begin(), c.x_grid.end());

  Engine g = make_stream(derive_seed(*c.seed, 0xC0C5), 0);
  std::string jsonl;
  std::vector<std::vector<std::uint64_t>> distinct(c.x_grid.size());
  for (std::size_t i = 0; i < c.limit_samples; ++i) {
    const CoxSample s = sample_cluster_cox(cluster, law, lo, w, g);
    json atoms = json::array();
    for (const auto& a : s.atoms) atoms.push_back({a.location, a.multiplicity});
    jsonl += json{{"W", s.W}, {"shift", s.shift}, {"window", s.window}, {"atoms", atoms}}.dump() + "\n";
    for (std::size_t k = 0; k < c.x_grid.size(); ++k)
      distinct[k].push_back(static_cast<std::uint64_t>(std::count_if(
          s.atoms.begin(), s.atoms.end(), [&](const CoxAtom& a) { return a.location > c.x_grid[k]; })));
  }
  dir.write_text("cox_samples.jsonl", jsonl);

  std::ostringstream cdf;
  cdf << "x,mixed_gumbel_cdf\n";
  for (int i = -80; i <= 160; ++i) {
    const double x = 0.05 * i;
    cdf << fd(x) << ',' << fd(mixed_gumbel_cdf(x, cluster.v, w)) << '\n';
  }
  dir.write_text("mixed_gumbel.csv", cdf.str());

  Result r;
  std::ostringstream pmf;
  pmf << "x,k,empirical,limit\n";
  json marg = json::array();
  for (std::size_t k = 0; k < c.x_grid.size(); ++k) {
    const double x = c.x_grid[k];
    const std::uint64_t kmax = *std::max_element(distinct[k].begin(), distinct[k].end());
    std::vector<double> emp(kmax + 1, 0.0), lim;
    for (auto d : distinct[k]) emp[d] += 1.0 / static_cast<double>(distinct[k].size());
    double cum = 0.0;
    for (std::uint64_t j = 0; j <= kmax || cum < 1.0 - 1e-12; ++j) {
      lim.push_back(limit_count_pmf(x, j, cluster.v, w));
      cum += lim.back();
      if (j > kmax + 10000) break;
    }
    const double tv = tv_distance(emp, lim) + 0.5 * std::max(0.0, 1.0 - cum);
    for (std::size_t j = 0; j < std::max(emp.size(), lim.size()); ++j)
      pmf << fd(x) << ',' << j << ',' << fd(j < emp.size() ? emp[j] : 0.0) << ','
          << fd(j < lim.size() ? lim[j] : 0.0) << '\n';
    marg.push_back({{"x", x}, {"tv", tv}, {"pass", tv < c.marginal_tv_max}});
    r.pass = r.pass && tv < c.marginal_tv_max;
  }
  dir.write_text("count_pmf.csv", pmf.str());

  Engine g2 = make_stream(derive_seed(*c.seed, 0x5095), 0);
  const SuperpositionReport sp = superposition_check(cluster, law, w, c.x_grid, c.limit_samples, g2);
  r.pass = r.pass && sp.max_abs_diff < c.superposition_tv_max;
  r.body["v"] = cluster.v;
  r.body["marginal_counts"] = marg;
  r.body["superposition"] = {{"grid", sp.grid},
                             {"empirical", sp.empirical},
                             {"limit", sp.limit},
                             {"max_abs_diff", sp.max_abs_diff},
                             {"pass", sp.max_abs_diff < c.superposition_tv_max}};
  return r;
}

// verify-max -------------------------------------------------------------

Result run_verify_max(const ExperimentConfig& c, ArtifactDir& dir) {
  const BRWConfig cfg = c.make_brw(c.n_list.front());
  const MaxLawReport rep = max_law_experiment(cfg, c.n_list, options(c));
  std::ostringstream csv;
  csv << "n,x,empirical,limit\n";
  json rows = json::array();
  for (const auto& row : rep.rows) {
    for (const auto& p : row.ks.trace)
      csv << row.n << ',' << fd(p.x) << ',' << fd(p.empirical) << ',' << fd(p.reference) << '\n';
    json jr = {{"n", row.n},
               {"replicates", row.replicates},
               {"survivors", row.survivors},
               {"flagged", row.flagged},
               {"ks", ks_json(row.ks)}};
    if (row.proxy_ks) jr["proxy_ks"] = ks_json(*row.proxy_ks);
    rows.push_back(jr);
  }
  dir.write_text("max_law.csv", csv.str());
  Result r;
  const double last = rep.rows.back().ks.statistic;
  r.pass = last < c.ks_max && (!c.require_trend || rep.ks_non_increasing);
  r.body = {{"v", rep.v},
            {"w_source", rep.w_source},
            {"rows", rows},
            {"ks_last", last},
            {"ks_max", c.ks_max},
            {"ks_non_increasing", rep.ks_non_increasing},
            {"trend_required", c.require_trend}};
  return r;
}

// verify-pp --------------------------------------------------------------

Result run_verify_pp(const ExperimentConfig& c, ArtifactDir& dir) {
  const BRWConfig cfg = c.make_brw(c.n);
  const PointCountReport rep =
      point_count_experiment(cfg, c.x_grid, options(c), c.limit_samples, c.mass_cap);
  std::ostringstream csv;
  csv << "x,count,k,empirical,limit\n";
  json rows = json::array();
  Result r;
  for (const auto& row : rep.rows) {
    const std::size_t nd = std::max(row.distinct_empirical.size(), row.distinct_limit.size());
    for (std::size_t k = 0; k < nd; ++k)
      csv << fd(row.x) << ",distinct," << k << ','
          << fd(k < row.distinct_empirical.size() ? row.distinct_empirical[k] : 0.0) << ','
          << fd(k < row.distinct_limit.size() ? row.distinct_limit[k] : 0.0) << '\n';
    for (std::size_t k = 0; k < row.mass_empirical.size(); ++k)
      csv << fd(row.x) << ",mass," << k << ',' << fd(row.mass_empirical[k]) << ','
          << fd(row.mass_limit[k]) << '\n';
    const bool ok = row.distinct_tv < c.distinct_tv_max && row.mass_tv < c.mass_tv_max;
    r.pass = r.pass && ok;
    rows.push_back({{"x", row.x}, {"distinct_tv", row.distinct_tv}, {"mass_tv", row.mass_tv}, {"pass", ok}});
  }
  dir.write_text("counts.csv", csv.str());
  r.body = {{"window", window_json(c)},
            {"n", rep.n},
            {"replicates", rep.replicates},
            {"flagged", rep.flagged},
            {"limit_samples", rep.limit_samples},
            {"mass_bins", json{{"exact_up_to", rep.mass_cap - 1}, {"lump_from", rep.mass_cap}}},
            {"rows", rows}};
  return r;
}

// verify-lemmas ----------------------------------------------------------

json bound_json(const BoundReport& b) {
  json rows = json::array();
  for (const auto& row : b.rows) {
    json jr = {{"y", row.y}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"pass", row.pass}, {"checked", row.checked}};
    if (b.variant == LemmaVariant::Tree) {
      jr["x"] = row.x;
      jr["z"] = row.z;
    }
    rows.push_back(jr);
  }
  return {{"gamma", b.gamma}, {"xi", b.xi}, {"slack", b.slack}, {"rows", rows}, {"pass", b.all_pass()}};
}

Result run_verify_lemmas(const ExperimentConfig& c, ArtifactDir& dir) {
  const DisplacementLaw law = c.make_displacement();
  Result r;
  std::ostringstream csv;
  csv << "variant,x,y,z,lhs,rhs,pass\n";
  const BoundReport trunk = trunk_bound_check(law, c.gamma, c.displacement.xi, c.y_grid, c.slack);
  for (const auto& row : trunk.rows)
    csv << "trunk,," << fd(row.y) << ",," << fd(row.lhs) << ',' << fd(row.rhs) << ',' << row.pass << '\n';
  r.body["trunk"] = bound_json(trunk);
  r.pass = trunk.all_pass();

  if (law.regime == Regime::Suplogarithmic && c.tree) {
    const BoundReport tree = tree_bound_check(law, c.gamma, default_tree_grid(), c.slack);
    for (const auto& row : tree.rows)
      csv << "tree," << fd(row.x) << ',' << fd(row.y) << ',' << fd(row.z) << ',' << fd(row.lhs) << ','
          << fd(row.rhs) << ',' << row.pass << '\n';
    r.body["tree"] = bound_json(tree);
    r.pass = r.pass && tree.all_pass();
  }
  dir.write_text("bounds.csv", csv.str());

  if (law.regime == Regime::Suplogarithmic && c.rare_samples > 0) {
    const double m = c.make_offspring().mean();
    RareEventReport rare = rare_event_trend(law, m, c.rare_n, c.rare_samples, c.norm, c.threads,
                                            derive_seed(*c.seed, 0x4A4E));
    attach_chernoff(rare, law, c.chernoff_n, c.chernoff_gamma);
    std::ostringstream rc;
    rc << "n,x_n,y_n,samples,hits,p_hat,upper,scaled,exact_zero\n";
    json rows = json::array();
    for (const auto& row : rare.rows) {
      rc << row.n << ',' << fd(row.x_n) << ',' << fd(row.y_n) << ',' << row.samples << ',' << row.hits
         << ',' << fd(row.p_hat) << ',' << fd(row.upper) << ',' << fd(row.scaled) << ','
         << row.exact_zero << '\n';
      rows.push_back({{"n", row.n},
                      {"x_n", row.x_n},
                      {"y_n", row.y_n},
                      {"samples", row.samples},
                      {"hits", row.hits},
                      {"upper_95", row.upper},
                      {"m_pow_n_upper", row.scaled},
                      {"exact_zero", row.exact_zero}});
    }
    dir.write_text("rare_event.csv", rc.str());
    std::ostringstream cc;
    cc << "n,s,moment,log_m_pow_n_bound\n";
    json ch = json::array();
    for (const auto& row : rare.chernoff) {
      cc << row.n << ',' << fd(row.s) << ',' << fd(row.moment) << ',' << fd(row.log_scaled) << '\n';
      ch.push_back({{"n", row.n}, {"log_m_pow_n_bound", row.log_scaled}});
    }
    dir.write_text("chernoff.csv", cc.str());
    r.body["rare_event"] = {{"delta", c.norm.delta},
                            {"K", c.norm.K},
                            {"rows", rows},
                            {"non_increasing", rare.non_increasing},
                            {"chernoff_gamma", rare.gamma},
                            {"chernoff", ch},
                            {"chernoff_decreasing", rare.chernoff_decreasing}};
    r.pass = r.pass && rare.non_increasing && rare.chernoff_decreasing;
  }
  return r;
}

// verify-gw --------------------------------------------------------------

Result run_verify_gw(const ExperimentConfig& c, ArtifactDir& dir) {
  const OffspringLaw law = c.make_offspring();
  const ClusterLaw cluster = compute_cluster_law(law);
  const ClusterLaw finer = compute_cluster_law(law, cluster.tol / 2.0);
  const double v_shift = std::abs(cluster.v - finer.v);
  Result r;

  constexpr std::size_t J = 20;
  std::vector<double> ref(J + 2, 0.0);  // index J + 1 collects A > J
  double w = 1.0;
  for (std::size_t l = 0; l < cluster.level_weights.size(); ++l) {
    const auto head = zl_pmf_head(law, static_cast<int>(l), J);
    for (std::size_t j = 1; j <= J; ++j) ref[j] += w * head[j] / cluster.v;
    w /= law.mean();
  }
  double in_range = 0.0;
  for (std::size_t j = 1; j <= J; ++j) in_range += ref[j];
  ref[J + 1] = std::max(0.0, 1.0 - in_range);

  std::vector<double> emp(J + 2, 0.0);
  Engine g = make_stream(derive_seed(*c.seed, 0xA), 0);
  for (std::size_t i = 0; i < c.gw_samples; ++i) {
    const std::uint64_t a = sample_A(cluster, law, g);
    emp[std::min<std::uint64_t>(a, J + 1)] += 1.0 / static_cast<double>(c.gw_samples);
  }
  const double tv = tv_distance(emp, ref);
  std::ostringstream csv;
  csv << "j,empirical,reference\n";
  for (std::size_t j = 1; j <= J + 1; ++j)
    csv << (j <= J ? std::to_string(j) : ">" + std::to_string(J)) << ',' << fd(emp[j]) << ','
        << fd(ref[j]) << '\n';
  dir.write_text("cluster_pmf.csv", csv.str());
  r.body["cluster"] = {{"v", cluster.v},
                       {"v_half_tol", finer.v},
                       {"v_shift", v_shift},
                       {"levels", cluster.level_weights.size()},
                       {"extinction", cluster.extinction},
                       {"samples", c.gw_samples},
                       {"tv", tv},
                       {"pass", tv < c.cluster_tv_max && v_shift < 1e-9}};
  r.pass = tv < c.cluster_tv_max && v_shift < 1e-9;

  const KSResult ss = selfsimilarity_check(law, c.selfsim_samples, c.w_cap, derive_seed(*c.seed, 0x55));
  r.body["selfsimilarity"] = ks_json(ss);
  r.pass = r.pass && ss.pass;

  if (law.family() == OffspringFamily::LinearFractional) {
    const double q = law.extinction_probability();
    std::vector<double> ws(c.selfsim_samples);
    const std::uint64_t s = derive_seed(*c.seed, 0xB);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      Engine e = make_stream(s, i);
      ws[i] = estimate_W(law, c.w_cap, e).value;
    }
    const Cdf F = [q](double x) { return x < 0.0 ? 0.0 : q + (1.0 - q) * -std::expm1(-(1.0 - q) * x); };
    const Cdf Fl = [q](double x) { return x <= 0.0 ? 0.0 : q + (1.0 - q) * -std::expm1(-(1.0 - q) * x); };
    const KSResult k = ks_statistic(ws, F, Fl);
    r.body["closed_form_W"] = ks_json(k);
    r.body["closed_form_W"]["ks_max"] = c.w_ks_max;
    r.pass = r.pass && k.statistic < c.w_ks_max;
    std::ostringstream wc;
    wc << "x,empirical,closed_form\n";
    for (const auto& p : k.trace) wc << fd(p.x) << ',' << fd(p.empirical) << ',' << fd(p.reference) << '\n';
    dir.write_text("w_closed_form.csv", wc.str());
  }
  return r;
}

// report -----------------------------------------------------------------

Result run_report(const ExperimentConfig& c, ArtifactDir& dir) {
  std::vector<std::filesystem::path> found;
  if (std::filesystem::exists(c.out))
    for (const auto& e : std::filesystem::directory_iterator(c.out))
      if (e.is_directory() && e.path() != dir.path() && std::filesystem::exists(e.path() / "report.json"))
        found.push_back(e.path());
  std::sort(found.begin(), found.end());
  std::ostringstream csv;
  csv << "run,kind,seed,status\n";
  json runs = json::array();
  for (const auto& p : found) {
    std::ifstream in(p / "report.json");
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      runs.push_back({{"run", p.filename().string()}, {"status", "unreadable"}});
      csv << p.filename().string() << ",,,unreadable\n";
      continue;
    }
    const std::string kind = j.value("kind", "");
    const json seed = j.contains("seed") ? j["seed"] : json(nullptr);
    const std::string status = j.value("status", "");
    csv << p.filename().string() << ',' << kind << ',' << (seed.is_null() ? "" : seed.dump()) << ','
        << status << '\n';
    runs.push_back({{"run", p.filename().string()}, {"kind", kind}, {"seed", seed}, {"status", status}});
  }
  dir.write_text("summary.csv", csv.str());
  Result r;
  r.body["runs"] = runs;
  return r;
}

}  // namespace

std::filesystem::path artifact_dir(const ExperimentConfig& config) {
  if (config.kind == ExperimentKind::Report) return config.out / "report";
  return config.out / (std::string(to_string(config.kind)) + "-s" + std::to_string(*config.seed));
}

RunOutcome run(const ExperimentConfig& config) {
  RunOutcome out;
  out.dir = artifact_dir(config);
  ArtifactDir dir(out.dir);
  json report = {{"kind", to_string(config.kind)},
                 {"seed", config.seed ? json(*config.seed) : json(nullptr)},
                 {"config", config.to_json()}};
  try {
    Result r;
    switch (config.kind) {
      case ExperimentKind::Normalize: r = run_normalize(config, dir); break;
      case ExperimentKind::Simulate: r = run_simulate(config, dir); break;
      case ExperimentKind::LimitSample: r = run_limit_sample(config, dir); break;
      case ExperimentKind::VerifyMax: r = run_verify_max(config, dir); break;
      case ExperimentKind::VerifyPP: r = run_verify_pp(config, dir); break;
      case ExperimentKind::VerifyLemmas: r = run_verify_lemmas(config, dir); break;
      case ExperimentKind::VerifyGW: r = run_verify_gw(config, dir); break;
      case ExperimentKind::Report: r = run_report(config, dir); break;
    }
    report["results"] = r.body;
    report["status"] = r.pass ? "pass" : "fail";
    out.status = r.pass ? ExitStatus::Pass : ExitStatus::StatisticalFailure;
  } catch (const std::exception& e) {
    report["status"] = "error";
    report["error"] = e.what();
    out.status = ExitStatus::RuntimeError;
  }
  dir.write_json("report.json", report);
  dir.write_manifest();
  return out;
}

}  // namespace lsv
