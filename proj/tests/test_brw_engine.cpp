#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lsvbrw/brw_engine.hpp"
#include "lsvbrw/error.hpp"

using namespace lsv;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DisplacementLaw sqrt_log() { return DisplacementLaw::make(TailFunction::power_log(1.0, 0.5)); }
DisplacementLaw lognormal() { return DisplacementLaw::make(TailFunction::lognormal()); }

BRWConfig sublog_config(OffspringLaw off, int n, double window = -6.0) {
  BRWConfig c{std::move(off), sqrt_log(), n, Regime::Sublogarithmic, window, {}, 100'000'000};
  return c;
}

BRWConfig suplog_config(OffspringLaw off, int n, NormParams p = {}) {
  BRWConfig c{std::move(off), lognormal(), n, Regime::Suplogarithmic, -6.0, p, 100'000'000};
  return c;
}

// Draws in a fixed order from a list.
struct ListSampler {
  std::shared_ptr<std::vector<double>> draws;
  std::shared_ptr<std::size_t> pos;
  double operator()(Engine&) const { return (*draws)[(*pos)++ % draws->size()]; }
};

// Recursive reference: a node draws its children's displacements in order,
// then the subtrees are explored first child first.
void reference_leaves(int depth, int n, unsigned d, double V, double T,
                      const std::function<double()>& next, std::vector<std::pair<double, double>>& out) {
  if (depth == n) {
    out.emplace_back(V, T);
    return;
  }
  std::vector<double> xs(d);
  for (auto& x : xs) x = next();
  for (double x : xs) reference_leaves(depth + 1, n, d, V + x, std::max(T, x), next, out);
}

}  // namespace

TEST_CASE("two leaves at n = 1") {
  auto cfg = sublog_config(OffspringLaw::deterministic(2), 1, -10.0);
  const Scale scale = make_scale(cfg);
  auto draws = std::make_shared<std::vector<double>>(std::vector<double>{3.5, 7.25});
  ListSampler s{draws, std::make_shared<std::size_t>(0)};
  Engine g = make_stream(1, 0);
  const auto snap = simulate_tree(cfg, scale, g, s);
  CHECK(snap.Z_n == 2);
  CHECK(snap.M_n == 7.25);
  CHECK(snap.V_atoms == std::vector<double>{3.5, 7.25});
  CHECK(snap.nodes_visited == 3);
}

TEST_CASE("constant displacements") {
  auto cfg = sublog_config(OffspringLaw::deterministic(2), 5, -100.0);
  const Scale scale = make_scale(cfg);
  Engine g = make_stream(1, 0);
  const auto snap = simulate_tree(cfg, scale, g, [](Engine&) { return 3.0; });
  CHECK(snap.Z_n == 32);
  CHECK(snap.M_n == 15.0);
  REQUIRE(snap.V_atoms.size() == 32);
  for (double v : snap.V_atoms) CHECK(v == 15.0);
  for (double t : snap.T_atoms) CHECK(t == 3.0);
  CHECK(snap.T_max == 3.0);
}

TEST_CASE("leaf positions match a recursive reference") {
  Engine src = make_stream(99, 0);
  auto draws = std::make_shared<std::vector<double>>();
  for (int i = 0; i < 2 * (1 << 7); ++i) draws->push_back(sample_displacement(sqrt_log(), src));
  auto cfg = sublog_config(OffspringLaw::deterministic(2), 7, -100.0);
  Engine g = make_stream(1, 0);
  const auto snap = simulate_tree(cfg, make_scale(cfg), g,
                                  ListSampler{draws, std::make_shared<std::size_t>(0)});

  std::size_t pos = 0;
  std::vector<std::pair<double, double>> ref;
  reference_leaves(0, 7, 2, 0.0, -kInf, [&] { return (*draws)[pos++]; }, ref);
  REQUIRE(ref.size() == 128);
  REQUIRE(snap.V_atoms.size() == 128);
  REQUIRE(snap.T_atoms.size() == 128);
  std::vector<double> rv, rt;
  for (auto [v, t] : ref) {
    rv.push_back(v);
    rt.push_back(t);
  }
  CHECK(snap.V_atoms == rv);
  CHECK(snap.T_atoms == rt);
  CHECK(snap.M_n == *std::max_element(rv.begin(), rv.end()));
  CHECK(snap.T_max == *std::max_element(rt.begin(), rt.end()));
}

TEST_CASE("normalization modes") {
  const auto ab = normalize_atoms(std::vector<double>{10.0, 12.5}, SuplogMode{10.0, 2.5});
  CHECK(ab == std::vector<double>{0.0, 1.0});
  const auto L = TailFunction::power_log(1.0, 0.5);
  const auto s = normalize_atoms(std::vector<double>{std::exp(9.0)}, SublogMode{&L, 2.0});
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-14));
  const auto r = normalize_atoms(std::vector<double>{5.0, 3.0, 5.0}, RecenterAtMax{});
  CHECK(r == std::vector<double>{0.0, -2.0, 0.0});
  CHECK(normalize_atoms(std::vector<double>{}, RecenterAtMax{}).empty());
}

TEST_CASE("extinct trees") {
  const auto lf = OffspringLaw::linear_fractional_with(2.0, 0.5);
  auto cfg = sublog_config(lf, 12);
  const Scale scale = make_scale(cfg);
  const auto f = StepFunction::indicator_above(-2.0);
  int seen = 0;
  for (std::uint64_t r = 0; r < 200 && seen < 5; ++r) {
    Engine g = make_stream(4, r);
    const auto snap = simulate_tree(cfg, scale, g);
    if (snap.survived()) continue;
    ++seen;
    CHECK(snap.M_n == -kInf);
    const auto id = stopping_line_identity_check(snap, f, cfg, scale);
    CHECK(id.applicable);
    CHECK(id.lhs == 0.0);
    CHECK(id.rhs == 0.0);
  }
  CHECK(seen == 5);
}

TEST_CASE("stopping-line identity holds on every applicable tree") {
  SUBCASE("sublog") {
    auto cfg = sublog_config(OffspringLaw::poisson(2.0), 12);
    const Scale scale = make_scale(cfg);
    const double level = std::get<SublogScale>(scale).level;
    const double floor = std::max(cfg.window_lower, -0.25 * level);
    int applicable = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      Engine g = make_stream(2024, r);
      const auto snap = simulate_tree(cfg, scale, g);
      for (double x : {floor, floor + 0.5, 0.0, 1.0}) {
        const auto id = stopping_line_identity_check(snap, StepFunction::indicator_above(x), cfg, scale);
        if (!id.applicable) continue;
        CHECK(id.lhs == id.rhs);
      }
      StepFunction step{{{floor, 0.0, 1.5}, {0.0, 2.0, 0.25}}};
      const auto id = stopping_line_identity_check(snap, step, cfg, scale);
      if (id.applicable) {
        ++applicable;
        CHECK(std::abs(id.lhs - id.rhs) <= 1e-9 * std::max(1.0, std::abs(id.lhs)));
      }
    }
    CHECK(applicable > 50);
    CHECK_THROWS_AS(stopping_line_identity_check(ExtremalSnapshot{}, StepFunction::indicator_above(floor - 1.0),
                                                 cfg, scale),
                    Error);
  }
  SUBCASE("suplog") {
    auto cfg = suplog_config(OffspringLaw::poisson(2.0), 12, {0.1, 0.25, 0.0});
    const Scale scale = make_scale(cfg);
    const auto& s = std::get<NormSeq>(scale);
    REQUIRE(s.b - s.z > 0.0);
    const double floor = std::max(cfg.window_lower, -s.z / s.a);
    int applicable = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      Engine g = make_stream(2025, r);
      const auto snap = simulate_tree(cfg, scale, g);
      const auto id = stopping_line_identity_check(snap, StepFunction::indicator_above(floor), cfg, scale);
      if (!id.applicable) {
        CHECK(id.reason.find("identity not applicable") == 0);
        continue;
      }
      ++applicable;
      CHECK(id.lhs == id.rhs);
    }
    CHECK(applicable > 50);
  }
}

TEST_CASE("batch determinism across thread counts") {
  auto cfg = sublog_config(OffspringLaw::poisson(2.0), 10);
  const Scale scale = make_scale(cfg);
  const auto a = batch_simulate(cfg, scale, 16, 1, 77);
  const auto b = batch_simulate(cfg, scale, 16, 4, 77);
  REQUIRE(a.replicates.size() == b.replicates.size());
  for (std::size_t i = 0; i < a.replicates.size(); ++i) {
    const auto& x = *a.replicates[i].snapshot;
    const auto& y = *b.replicates[i].snapshot;
    CHECK(x.Z_n == y.Z_n);
    CHECK(x.V_atoms == y.V_atoms);
    CHECK(x.T_atoms == y.T_atoms);
    CHECK(x.line.size() == y.line.size());
    CHECK(x.nodes_visited == y.nodes_visited);
  }
  CHECK(a.summary.survivors == b.summary.survivors);
  CHECK(a.summary.M_n_quantiles == b.summary.M_n_quantiles);
}

TEST_CASE("survival counts") {
  auto det = sublog_config(OffspringLaw::deterministic(2), 10);
  CHECK(batch_simulate(det, make_scale(det), 100, 2, 1).summary.survivors == 100);

  const auto p = OffspringLaw::poisson(2.0);
  // P[Z_10 > 0] by pgf iteration.
  double f = 0.0;
  for (int i = 0; i < 10; ++i) f = std::exp(2.0 * (f - 1.0));
  auto cfg = sublog_config(p, 10, kInf);
  const auto res = batch_simulate(cfg, make_scale(cfg), 10000, 4, 3);
  const double frac = static_cast<double>(res.summary.survivors) / 10000.0;
  CHECK(std::abs(frac - (1.0 - f)) < 0.02);
  CHECK(res.summary.M_n_quantiles.size() == 5);
  CHECK(std::is_sorted(res.summary.M_n_quantiles.begin(), res.summary.M_n_quantiles.end()));
}

TEST_CASE("node cap flags only the offending replicate") {
  auto cfg = sublog_config(OffspringLaw::poisson(2.0), 12);
  cfg.node_cap = 3000;
  const auto res = batch_simulate(cfg, make_scale(cfg), 40, 3, 5);
  std::size_t flagged = 0;
  for (const auto& r : res.replicates) {
    CHECK(r.cap_exceeded != r.snapshot.has_value());
    flagged += r.cap_exceeded;
  }
  CHECK(flagged == res.summary.flagged);
  CHECK(flagged > 0);
  CHECK(flagged < 40);

  Engine g = make_stream(0, 0);
  auto tiny = sublog_config(OffspringLaw::deterministic(2), 8);
  tiny.node_cap = 10;
  CHECK_THROWS_AS(simulate_tree(tiny, make_scale(tiny), g), NodeCapExceeded);
}

TEST_CASE("regime mismatch is rejected") {
  auto cfg = sublog_config(OffspringLaw::poisson(2.0), 5);
  cfg.regime = Regime::Suplogarithmic;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("suplog negligible sets and gap") {
  auto cfg = suplog_config(OffspringLaw::poisson(2.0), 10);
  const Scale scale = make_scale(cfg);
  const auto lv = engine_levels(cfg, scale);
  const auto& s = std::get<NormSeq>(scale);
  CHECK(lv.big == doctest::Approx(0.9 * s.b));
  CHECK(lv.collect == doctest::Approx(s.b - 6.0 * s.a));
  const auto res = batch_simulate(cfg, scale, 50, 2, 9);
  for (const auto& r : res.replicates) {
    const auto& snap = *r.snapshot;
    CHECK(snap.negligible_above + snap.a3_above <= snap.V_atoms.size());
    if (snap.survived()) CHECK(snap.T_max <= snap.M_n);
    if (snap.gap_max) CHECK(*snap.gap_max >= 0.0);
  }
}
