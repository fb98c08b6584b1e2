#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "lsvbrw/error.hpp"
#include "lsvbrw/limit_laws.hpp"
#include "lsvbrw/verify.hpp"

using namespace lsv;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("exponential Poisson process") {
  Engine g = make_stream(11, 0);
  for (double c : {0.0, -std::log(4.0)}) {
    const int reps = 100000;
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
      const auto pts = sample_exp_ppp(c, g);
      CHECK(std::is_sorted(pts.begin(), pts.end(), std::greater<>()));
      for (double x : pts) CHECK(x > c);
      total += static_cast<double>(pts.size());
    }
    const double mu = std::exp(-c);
    CHECK(std::abs(total / reps - mu) < 4.0 * std::sqrt(mu / reps));
  }
  const std::vector<double> e{0.5, 1.2};
  CHECK(exp_ppp_from_draws(0.0, e) == std::vector<double>{1.2, 0.5});
  CHECK_THROWS_AS(sample_exp_ppp(-kInf, g), Error);
}

TEST_CASE("W representations") {
  CHECK(std::holds_alternative<ConstantOne>(closed_form_W(OffspringLaw::deterministic(2))));
  const auto lf = closed_form_W(OffspringLaw::linear_fractional_with(2.0, 0.5));
  CHECK(std::get<LinearFractionalW>(lf).extinction == doctest::Approx(0.5));
  CHECK_FALSE(has_closed_form_W(OffspringLaw::poisson(2.0)));
  CHECK_THROWS_AS(closed_form_W(OffspringLaw::poisson(2.0)), Error);

  // Laplace transform of (1/2) delta_0 + (1/2) Exp(mean 2).
  for (double s : {0.0, 0.3, 1.0, 5.0})
    CHECK(laplace_transform_W(lf, s) == doctest::Approx(0.5 + 0.5 / (1.0 + 2.0 * s)));
  CHECK(laplace_transform_W(lf, kInf) == doctest::Approx(0.5));
  CHECK_THROWS_AS(laplace_transform_W(EmpiricalW{}, 1.0), Error);

  Engine g = make_stream(12, 0);
  const int N = 100000;
  double mean = 0.0;
  int zeros = 0;
  for (int i = 0; i < N; ++i) {
    const double w = sample_W(lf, g);
    mean += w / N;
    zeros += w == 0.0;
  }
  CHECK(std::abs(mean - 1.0) < 4.0 * std::sqrt(3.0 / N));
  CHECK(std::abs(zeros / double(N) - 0.5) < 4.0 * std::sqrt(0.25 / N));
}

TEST_CASE("mixed Gumbel cdf") {
  CHECK(mixed_gumbel_cdf(std::log(2.0), 2.0, ConstantOne{}) == doctest::Approx(std::exp(-1.0)));
  CHECK(mixed_gumbel_cdf(kInf, 2.0, ConstantOne{}) == 1.0);
  CHECK(mixed_gumbel_cdf(60.0, 2.0, ConstantOne{}) == doctest::Approx(1.0));
  const OffspringLaw off = OffspringLaw::linear_fractional_with(2.0, 0.5);
  const double v = compute_cluster_law(off).v;
  const auto w = closed_form_W(off);
  CHECK(mixed_gumbel_cdf(0.0, v, w) == doctest::Approx(0.5 + 0.5 / (1.0 + 2.0 * v)));
  CHECK(mixed_gumbel_cdf(-60.0, v, w) == doctest::Approx(0.5));

  const EmpiricalW pool{{0.0, 1.0, 2.0}};
  CHECK(mixed_gumbel_cdf(0.0, 1.5, pool) ==
        doctest::Approx((1.0 + std::exp(-1.5) + std::exp(-3.0)) / 3.0));
  CHECK_THROWS_AS(mixed_gumbel_cdf(0.0, 1.0, EmpiricalW{}), Error);

  for (const WRepresentation& r : {WRepresentation{ConstantOne{}}, w, WRepresentation{pool}}) {
    double prev = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.25) {
      const double F = mixed_gumbel_cdf(x, v, r);
      CHECK(F >= prev);
      CHECK(F <= 1.0);
      prev = F;
    }
  }
}

TEST_CASE("cluster Cox process") {
  const auto det = OffspringLaw::deterministic(2);
  const auto cl = compute_cluster_law(det);
  Engine g = make_stream(13, 0);

  const auto empty = sample_cluster_cox(cl, det, 0.0, EmpiricalW{{0.0}}, g);
  CHECK(empty.atoms.empty());
  CHECK(empty.shift == -kInf);

  const int N = 100000;
  int voids = 0;
  double count_mean = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto s = sample_cluster_cox(cl, det, 0.0, ConstantOne{}, g);
    CHECK(s.shift == doctest::Approx(std::log(2.0)));
    for (const auto& a : s.atoms) {
      CHECK(a.location > 0.0);
      CHECK(a.multiplicity >= 1);
    }
    voids += s.atoms.empty();
    count_mean += static_cast<double>(s.atoms.size()) / N;
  }
  CHECK(std::abs(voids / double(N) - std::exp(-2.0)) < 0.005);
  CHECK(std::abs(count_mean - 2.0) < 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("Cox marginals match the count pmf") {
  const auto off = OffspringLaw::linear_fractional_with(2.0, 0.5);
  const auto cl = compute_cluster_law(off);
  const auto w = closed_form_W(off);
  Engine g = make_stream(14, 0);
  const int N = 100000;
  for (double x : {-1.0, 0.5}) {
    std::vector<double> emp(41, 0.0), ref(41, 0.0);
    for (int i = 0; i < N; ++i) {
      const auto s = sample_cluster_cox(cl, off, x, w, g);
      emp[std::min<std::size_t>(s.atoms.size(), 40)] += 1.0 / N;
    }
    double acc = 0.0;
    for (int k = 0; k < 40; ++k) acc += ref[k] = limit_count_pmf(x, k, cl.v, w);
    ref[40] = 1.0 - acc;
    CHECK(tv_distance(emp, ref) < 0.01);
  }
}

TEST_CASE("count pmf") {
  CHECK(limit_count_pmf(0.0, 0, 2.0, ConstantOne{}) == doctest::Approx(std::exp(-2.0)));
  double s = 0.0;
  for (int k = 0; k <= 40; ++k) s += limit_count_pmf(0.0, k, 2.0, ConstantOne{});
  CHECK(std::abs(s - 1.0) < 1e-10);

  const auto off = OffspringLaw::linear_fractional_with(2.0, 0.5);
  const double v = compute_cluster_law(off).v;
  const auto w = closed_form_W(off);
  CHECK(limit_count_pmf(0.0, 0, v, w) == doctest::Approx(mixed_gumbel_cdf(0.0, v, w)).epsilon(1e-14));
  double t = 0.0;
  for (int k = 0; k <= 400; ++k) t += limit_count_pmf(-1.0, k, v, w);
  CHECK(std::abs(t - 1.0) < 1e-10);

  const EmpiricalW pool{{0.5, 1.5}};
  CHECK(limit_count_pmf(0.0, 1, 2.0, pool) ==
        doctest::Approx(0.5 * (std::exp(-1.0) + 3.0 * std::exp(-3.0))));
}

TEST_CASE("Laplace functional") {
  const auto det = OffspringLaw::deterministic(2);
  const auto cl = compute_cluster_law(det);
  CHECK(limit_laplace_functional(StepFunction::zero(), cl, det, ConstantOne{}) == 1.0);
  for (double x : {-1.0, 0.0, 2.0}) {
    CHECK(limit_laplace_functional(StepFunction::indicator_above(x, kInf), cl, det, ConstantOne{}) ==
          doctest::Approx(std::exp(-2.0 * std::exp(-x))).epsilon(1e-9));
    for (double theta : {0.1, 1.0, 3.0}) {
      double S = 0.0;
      for (int l = 0; l < 200; ++l) S += std::ldexp(1.0, -l) * (1.0 - std::exp(-theta * std::ldexp(1.0, l)));
      CHECK(limit_laplace_functional(StepFunction::indicator_above(x, theta), cl, det, ConstantOne{}) ==
            doctest::Approx(std::exp(-S * std::exp(-x))).epsilon(1e-9));
    }
  }
  // Two pieces: the integral splits across cells.
  const StepFunction two{{{0.0, 1.0, 1.0}, {1.0, kInf, 2.0}}};
  double S = 0.0;
  for (int l = 0; l < 200; ++l) {
    const double z = std::ldexp(1.0, l);
    S += std::ldexp(1.0, -l) * ((1.0 - std::exp(-z)) * (1.0 - std::exp(-1.0)) +
                                (1.0 - std::exp(-2.0 * z)) * std::exp(-1.0));
  }
  CHECK(limit_laplace_functional(two, cl, det, ConstantOne{}) == doctest::Approx(std::exp(-S)).epsilon(1e-9));

  // Void functional equals the mixed Gumbel cdf for random W.
  const auto p = OffspringLaw::linear_fractional_with(2.0, 0.5);
  const auto pc = compute_cluster_law(p);
  const auto w = closed_form_W(p);
  CHECK(limit_laplace_functional(StepFunction::indicator_above(0.3, kInf), pc, p, w) ==
        doctest::Approx(mixed_gumbel_cdf(0.3, pc.v, w)).epsilon(1e-9));

  CHECK_THROWS_AS(limit_laplace_functional(StepFunction{{{-kInf, 0.0, 1.0}}}, cl, det, ConstantOne{}),
                  Error);
}

TEST_CASE("superposition of Z_1 copies is the log m shift") {
  const std::vector<double> grid{-1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  Engine g = make_stream(15, 0);
  for (const auto& off : {OffspringLaw::deterministic(2), OffspringLaw::linear_fractional_with(2.0, 0.5)}) {
    const auto cl = compute_cluster_law(off);
    const auto rep = superposition_check(cl, off, closed_form_W(off), grid, 100000, g);
    CHECK(rep.max_abs_diff < 0.01);
    CHECK(rep.limit.size() == grid.size());
  }
}
