#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "lsvbrw/galton_watson.hpp"
#include "lsvbrw/rng.hpp"
#include "lsvbrw/step_function.hpp"

namespace lsv {

/// Locations of a Poisson process with intensity e^{-x}dx on (c, inf), sorted descending.
std::vector<double> sample_exp_ppp(double c, Engine& g);
/// The same construction with the count and the exponential gaps supplied.
std::vector<double> exp_ppp_from_draws(double c, std::span<const double> exponentials);

/// How the martingale limit W is represented.
struct ConstantOne {};
/// Linear-fractional offspring: W = 0 w.p. q, else exponential with mean 1/(1 - q).
struct LinearFractionalW {
  double extinction = 0.0;
};
/// Pool of W values (for instance WEstimate draws), resampled uniformly.
struct EmpiricalW {
  std::vector<double> values;
};
using WRepresentation = std::variant<ConstantOne, LinearFractionalW, EmpiricalW>;

/// Exact representation for deterministic and linear-fractional laws, none otherwise.
bool has_closed_form_W(const OffspringLaw& law);
WRepresentation closed_form_W(const OffspringLaw& law);

double sample_W(const WRepresentation& w, Engine& g);
/// E[exp(-s W)] for s in [0, inf].
double laplace_transform_W(const WRepresentation& w, double s);
double prob_W_zero(const WRepresentation& w);

struct CoxAtom {
  double location;
  std::uint64_t multiplicity;
};

struct CoxSample {
  double W = 0.0;
  double shift = 0.0;  // log(v W); -inf when W = 0
  std::vector<CoxAtom> atoms;  // sorted by location, descending
  double window = 0.0;

  std::uint64_t total_mass() const;
};

/// Cluster Cox process restricted to (c, inf): atoms l_k + log(vW) with iid
/// multiplicities A_k, so that clusters above x are Poisson(v W e^{-x}).
/// The l_k are drawn on (c - log(vW), inf) before shifting.
CoxSample sample_cluster_cox(const ClusterLaw& cluster, const OffspringLaw& offspring, double c,
                             const WRepresentation& w, Engine& g);

/// x -> E[exp(-v W e^{-x})].
double mixed_gumbel_cdf(double x, double v, const WRepresentation& w);

/// E[exp(-V(f))] for the cluster Cox limit; the level series stops once the
/// remaining terms are below tol.
double limit_laplace_functional(const StepFunction& f, const ClusterLaw& cluster,
                                const OffspringLaw& offspring, const WRepresentation& w,
                                double tol = 1e-10);

/// P[number of clusters in (x, inf) = k] = E[(vWe^{-x})^k e^{-vWe^{-x}} / k!].
double limit_count_pmf(double x, std::uint64_t k, double v, const WRepresentation& w);

struct SuperpositionReport {
  std::vector<double> grid;
  std::vector<double> empirical;  // P[max of the superposition <= x]
  std::vector<double> limit;      // mixed_gumbel_cdf(x - log m)
  double max_abs_diff = 0.0;
};

/// Void probabilities of sum_{k <= Z_1} V^(k) against the log m shift of V.
SuperpositionReport superposition_check(const ClusterLaw& cluster, const OffspringLaw& offspring,
                                        const WRepresentation& w, const std::vector<double>& grid,
                                        std::size_t samples, Engine& g);

}  // namespace lsv
