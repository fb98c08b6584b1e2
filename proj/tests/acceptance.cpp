// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [--criterion k]   (all criteria when omitted)

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lsvbrw/brw_engine.hpp"
#include "lsvbrw/error.hpp"
#include "lsvbrw/galton_watson.hpp"
#include "lsvbrw/limit_laws.hpp"
#include "lsvbrw/normalization.hpp"
#include "lsvbrw/tail_model.hpp"
#include "lsvbrw/verify.hpp"

using namespace lsv;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

unsigned threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

DisplacementLaw sqrt_log() { return DisplacementLaw::make(TailFunction::power_log(1.0, 0.5)); }
DisplacementLaw half_log_sq() { return DisplacementLaw::make(TailFunction::power_log(0.5, 2.0)); }
DisplacementLaw lognormal() { return DisplacementLaw::make(TailFunction::lognormal()); }

BRWConfig brw(OffspringLaw off, DisplacementLaw law, int n, NormParams p = {}) {
  const Regime r = law.regime;
  return BRWConfig{std::move(off), std::move(law), n, r, -6.0, p, 100'000'000};
}

// 1. L(X) is unit exponential for every built-in a = 1 family.
Verdict exponential_embedding() {
  const std::size_t N = 100000;
  Verdict v{true, ""};
  int idx = 0;
  for (const auto& [name, law] : std::vector<std::pair<std::string, DisplacementLaw>>{
           {"sqrt-log", sqrt_log()}, {"half-log-squared", half_log_sq()}, {"lognormal", lognormal()}}) {
    Engine g = make_stream(kSeed, idx++);
    std::vector<double> y(N);
    for (auto& e : y) {
      const double x = sample_displacement(law, g);
      e = std::isinf(x) ? x : law.tail(x);
    }
    const auto ks = ks_statistic(y, [](double s) { return s <= 0.0 ? 0.0 : -std::expm1(-s); });
    v.pass = v.pass && ks.statistic < 0.01;
    v.detail += name + " KS=" + fmt(ks.statistic) + " ";
  }
  v.detail += "(threshold 0.01)";
  return v;
}

// 2. Normalizing constants.
Verdict normalization() {
  const double m = std::exp(1.0);
  double worst = 0.0;
  for (int n = 1; n <= 50; ++n) {
    const double b = compute_norm_seq(half_log_sq(), m, n).b;
    worst = std::max(worst, std::abs(b / std::exp(std::sqrt(2.0 * n)) - 1.0));
  }
  // Lognormal against exp(sqrt(2 n log m - 2 log(2 n log m))) at n = 1000. The
  // asymptotic form pins the exponent; the b-scale ratio tends to 1 only at
  // rate log n / sqrt n and is reported for reference.
  std::string ln;
  bool ln_ok = true;
  for (double mm : {2.0, std::exp(1.0)}) {
    const auto s = compute_norm_seq(lognormal(), mm, 1000);
    const double lam = 2.0 * 1000 * std::log(mm);
    const double e_ref = std::sqrt(lam - 2.0 * std::log(lam));
    const double exp_err = std::abs(std::log(s.b) / e_ref - 1.0);
    const double ratio = s.b / std::exp(e_ref);
    ln_ok = ln_ok && exp_err < 0.01;
    ln += " m=" + fmt(mm, 3) + ": exponent rel err=" + fmt(exp_err, 3) + ", b ratio=" + fmt(ratio, 4) + ";";
  }
  return {worst < 1e-9 && ln_ok,
          "max rel err of b_n vs e^{sqrt(2n)} over n=1..50: " + fmt(worst, 3) + " (tol 1e-9); lognormal n=1000" +
              ln + " (tol 0.01)"};
}

// 3. Stopping-line identity on 100 trees per regime.
Verdict stopping_line() {
  Verdict v{true, ""};
  for (int regime = 0; regime < 2; ++regime) {
    const bool sup = regime == 0;
    const BRWConfig cfg = sup ? brw(OffspringLaw::poisson(2.0), lognormal(), 12, {0.1, 0.25, 0.0})
                              : brw(OffspringLaw::poisson(2.0), sqrt_log(), 12);
    const Scale scale = make_scale(cfg);
    double line_norm;
    if (const auto* s = std::get_if<NormSeq>(&scale))
      line_norm = -s->z / s->a;
    else
      line_norm = -0.25 * std::get<SublogScale>(scale).level;
    const double floor = std::max(cfg.window_lower, line_norm);
    const std::vector<StepFunction> tests{
        StepFunction::indicator_above(floor),
        StepFunction::indicator_above(floor + 1.0),
        StepFunction{{{floor, floor + 0.5, 2.0}, {floor + 0.5, 1.0, 0.75}, {1.0, std::numeric_limits<double>::infinity(), 3.0}}}};
    const auto batch = batch_simulate(cfg, scale, 100, threads(), derive_seed(kSeed, 3 + regime));
    int applicable = 0, not_applicable = 0, mismatched = 0;
    double worst = 0.0;
    for (const auto& r : batch.replicates) {
      if (!r.snapshot) {
        ++not_applicable;
        continue;
      }
      bool app = true;
      for (const auto& f : tests) {
        const auto id = stopping_line_identity_check(*r.snapshot, f, cfg, scale);
        if (!id.applicable) {
          app = false;
          break;
        }
        const double rel = std::abs(id.lhs - id.rhs) / std::max(1.0, std::abs(id.lhs));
        worst = std::max(worst, rel);
        if (rel > 1e-9) ++mismatched;
      }
      app ? ++applicable : ++not_applicable;
    }
    v.pass = v.pass && mismatched == 0 && applicable > 0;
    v.detail += std::string(sup ? "suplog" : "sublog") + ": applicable " + std::to_string(applicable) +
                ", not applicable " + std::to_string(not_applicable) + ", max rel diff " + fmt(worst, 3) + "; ";
  }
  return v;
}

std::string ks_list(const MaxLawReport& rep, bool proxy = false) {
  std::string s;
  for (const auto& r : rep.rows) {
    const double k = proxy ? (r.proxy_ks ? r.proxy_ks->statistic : NAN) : r.ks.statistic;
    s += "n=" + std::to_string(r.n) + ":" + fmt(k) + " ";
  }
  return s;
}

ExperimentOptions options(std::uint64_t seed) {
  ExperimentOptions o;
  o.R = 2000;
  o.threads = threads();
  o.seed = seed;
  return o;
}

// 4. Sublog max law.
Verdict sublog_max() {
  const auto rep = max_law_experiment(brw(OffspringLaw::deterministic(2), sqrt_log(), 16), {8, 12, 16},
                                      options(kSeed));
  const double ks16 = rep.rows.back().ks.statistic;
  return {ks16 < 0.05 && rep.ks_non_increasing,
          "KS " + ks_list(rep) + "(n=16 threshold 0.05); non-increasing: " +
              (rep.ks_non_increasing ? "yes" : "no")};
}

// 5. Suplog max law.
Verdict suplog_max() {
  const auto rep = max_law_experiment(brw(OffspringLaw::deterministic(2), lognormal(), 16), {8, 12, 16},
                                      options(kSeed));
  const double ks16 = rep.rows.back().ks.statistic;
  return {ks16 < 0.08 && rep.ks_non_increasing,
          "KS " + ks_list(rep) + "(n=16 threshold 0.08); non-increasing: " +
              (rep.ks_non_increasing ? "yes" : "no") + "; one-big-jump proxy KS " + ks_list(rep, true)};
}

// 6. Point-process counts.
Verdict point_counts() {
  auto o = options(kSeed);
  const auto rep = point_count_experiment(brw(OffspringLaw::deterministic(2), sqrt_log(), 16),
                                          {-1.0, 0.0, 1.0}, o, 100000, 32);
  bool ok = true;
  std::string d;
  for (const auto& r : rep.rows) {
    ok = ok && r.distinct_tv < 0.05 && r.mass_tv < 0.07;
    d += "x=" + fmt(r.x) + ": distinct TV " + fmt(r.distinct_tv) + ", mass TV " + fmt(r.mass_tv) + "; ";
  }
  return {ok, d + "(thresholds 0.05 / 0.07)"};
}

// 7. Cluster law.
Verdict cluster_law() {
  const auto law = OffspringLaw::poisson(2.0);
  const auto c = compute_cluster_law(law, 1e-12);
  std::vector<double> ref(21, 0.0);
  double w = 1.0;
  for (std::size_t l = 0; l < c.level_weights.size() + 20; ++l, w /= 2.0) {
    const auto z = zl_pmf_head(law, static_cast<int>(l), 20);
    for (int j = 1; j <= 20; ++j) ref[j] += w * z[j] / c.v;
  }
  Engine g = make_stream(kSeed, 7);
  const std::size_t N = 100000;
  std::vector<double> emp(21, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto a = sample_A(c, law, g);
    if (a <= 20) emp[a] += 1.0 / N;
  }
  const double tv = tv_distance(emp, ref);
  const double dv = std::abs(compute_cluster_law(law, 0.5e-12).v - c.v);
  return {tv < 0.01 && dv < 1e-9, "TV on {1..20} " + fmt(tv) + " (threshold 0.01); v=" + fmt(c.v, 16) +
                                      ", |v(tol/2) - v(tol)| = " + fmt(dv, 3) + " (threshold 1e-9)"};
}

// 8. W self-similarity and the closed-form W.
Verdict w_law() {
  const auto ss = selfsimilarity_check(OffspringLaw::poisson(2.0), 10000, 100000, derive_seed(kSeed, 8));
  Engine g = make_stream(kSeed, 8);
  const auto lf = OffspringLaw::linear_fractional_with(2.0, 0.5);
  std::vector<double> w(10000);
  for (auto& x : w) x = estimate_W(lf, 100000, g).value;
  const Cdf F = [](double x) { return x < 0.0 ? 0.0 : 1.0 - 0.5 * std::exp(-x / 2.0); };
  const Cdf Fl = [](double x) { return x <= 0.0 ? 0.0 : 1.0 - 0.5 * std::exp(-x / 2.0); };
  const auto ks = ks_statistic(w, F, Fl);
  return {ss.statistic < ss.band_1 && ks.statistic < 0.02,
          "self-similarity KS " + fmt(ss.statistic) + " (1% band " + fmt(ss.band_1) +
              "); linear-fractional W KS " + fmt(ks.statistic) + " (threshold 0.02)"};
}

// 9. Bound consistency.
Verdict bounds() {
  const auto trunk = trunk_bound_check(half_log_sq(), 0.5, 1.0 / 3.0, {1e4, 1e6, 1e8, 1e10}, 2.0);
  const auto tree = tree_bound_check(lognormal(), 0.5, default_tree_grid(), 2.0);
  std::string d = "trunk lhs/rhs:";
  for (const auto& r : trunk.rows) d += " y=" + fmt(r.y, 2) + ":" + fmt(r.lhs, 6) + "/" + fmt(r.rhs, 6);
  int tp = 0;
  for (const auto& r : tree.rows) tp += r.pass;
  d += "; tree rows passing " + std::to_string(tp) + "/" + std::to_string(tree.rows.size());
  return {trunk.all_pass() && tree.all_pass(), d};
}

// 10. Rare-event trend.
Verdict rare_event() {
  auto rep = rare_event_trend(lognormal(), 2.0, {4, 6, 8}, 10'000'000, NormParams{}, threads(),
                              derive_seed(kSeed, 10));
  attach_chernoff(rep, lognormal(), {25, 50, 100, 200, 400, 800}, 0.95);
  std::string d = "m^n * upper:";
  for (const auto& r : rep.rows)
    d += " n=" + std::to_string(r.n) + ":" + fmt(r.scaled) + " (hits " + std::to_string(r.hits) + ")";
  d += std::string("; non-increasing: ") + (rep.non_increasing ? "yes" : "no") + "; Chernoff log(m^n bound):";
  for (const auto& c : rep.chernoff) d += " n=" + std::to_string(c.n) + ":" + fmt(c.log_scaled);
  return {rep.non_increasing, d};
}

// 11. CLI artifacts are identical across reruns and thread counts.
std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("lsvbrw_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path ini = root / "base.ini";
  std::ofstream(ini) << "[experiment]\nseed = 11\n"
                        "[offspring]\nfamily = poisson\nmean = 2\n"
                        "[displacement]\nfamily = power-log\nc = 1\nbeta = 0.5\n"
                        "[simulation]\nn = 8\nn_list = 6,8\nR = 300\n"
                        "[limit]\nsamples = 5000\nw_pool = 2000\n"
                        "[verify]\ngw_samples = 5000\nselfsim_samples = 2000\nrare_samples = 200000\n"
                        "rare_n = 4,6\ny_grid = 1e4,1e6\n";
  struct Job {
    std::string kind, extra;
  };
  const std::vector<Job> jobs{
      {"normalize", "--override displacement.family=lognormal"},
      {"simulate", ""},
      {"limit-sample", ""},
      {"verify-max", ""},
      {"verify-pp", ""},
      {"verify-lemmas", "--override displacement.family=lognormal"},
      {"verify-gw", ""},
  };
  bool ok = true;
  std::string d;
  std::vector<std::string> manifests;
  for (int pass = 0; pass < 3; ++pass) {
    const unsigned th = pass == 0 ? 1 : pass == 1 ? 1 : 4;
    const fs::path out = root / ("run" + std::to_string(pass));
    std::string line;
    for (const auto& j : jobs) {
      const std::string cmd = std::string(LSVBRW_CLI_PATH) + " " + j.kind + " --config " + ini.string() +
                              " --out " + out.string() + " --threads " + std::to_string(th) + " " + j.extra +
                              " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
      if (code != 0 && code != 2) {
        ok = false;
        d += j.kind + " exited " + std::to_string(code) + "; ";
      }
      line += j.kind + "\n" + slurp(out / (j.kind + "-s11") / "manifest.txt");
    }
    const std::string rep = std::string(LSVBRW_CLI_PATH) + " report --out " + out.string() + " > /dev/null 2>&1";
    const int rc = std::system(rep.c_str());
    if (!(WIFEXITED(rc) && WEXITSTATUS(rc) == 0)) {
      ok = false;
      d += "report failed; ";
    }
    line += "report\n" + slurp(out / "report" / "manifest.txt");
    manifests.push_back(line);
  }
  const bool same = manifests[0] == manifests[1] && manifests[1] == manifests[2];
  fs::remove_all(root);
  d += "8 experiment kinds, threads 1/1/4: manifests " + std::string(same ? "identical" : "differ");
  return {ok && same, d};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"exponential embedding", 1, exponential_embedding},
      {"normalization", 1, normalization},
      {"stopping-line identity", 30, stopping_line},
      {"sublog max law", 120, sublog_max},
      {"suplog max law", 120, suplog_max},
      {"point-process counts", 180, point_counts},
      {"cluster law", 10, cluster_law},
      {"W self-similarity", 30, w_law},
      {"bound consistency", 10, bounds},
      {"rare-event trend", 120, rare_event},
      {"determinism", 600, determinism},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--criterion" && i + 1 < argc) which.push_back(std::atoi(argv[++i]));
  }
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) which.push_back(i);

  int failures = 0;
  for (int k : which) {
    if (k < 1 || k > static_cast<int>(all.size())) {
      std::cerr << "no criterion " << k << "\n";
      return 1;
    }
    const auto& c = all[k - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::cout << "criterion " << k << " " << (pass ? "PASS" : "FAIL") << " [" << c.name << "] " << v.detail
              << " | runtime " << fmt(secs, 3) << " s (budget " << c.budget_s << " s"
              << (in_time ? "" : ", exceeded") << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
