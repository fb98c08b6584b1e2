#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsvbrw/galton_watson.hpp"
#include "lsvbrw/normalization.hpp"
#include "lsvbrw/rng.hpp"
#include "lsvbrw/step_function.hpp"
#include "lsvbrw/tail_model.hpp"

namespace lsv {

struct BRWConfig {
  OffspringLaw offspring;
  DisplacementLaw displacement;
  int n = 1;
  Regime regime = Regime::Suplogarithmic;
  /// Lower edge of the collection window on the normalized scale: K_min for
  /// suplog ((V - b_n)/a_n), x_min for sublog (L(V) - n log m).
  double window_lower = -6.0;
  /// delta and T of the suplog stopping line (K is unused by the engine).
  NormParams line_params{};
  std::uint64_t node_cap = 100'000'000;

  /// Throws when the regime differs from the displacement law's.
  void validate() const;
};

/// L-scale level n log m of the sublog pipeline.
struct SublogScale {
  double m = 0.0;
  int n = 0;
  double level = 0.0;
};

using Scale = std::variant<NormSeq, SublogScale>;

/// Normalization matching the config: NormSeq for suplog, SublogScale otherwise.
Scale make_scale(const BRWConfig& config);

struct StoppingLineRecord {
  int depth = 0;
  double displacement = 0.0;
  std::uint64_t descendants = 0;  // generation-n descendants, >= 1
};

struct ExtremalSnapshot {
  int n = 0;
  std::uint64_t Z_n = 0;
  /// Rightmost position; -inf when the tree is extinct at generation n.
  double M_n = 0.0;
  /// max over generation-n leaves of T(x); -inf when extinct.
  double T_max = 0.0;
  /// Raw positions V(x) above the collection threshold, in visiting order.
  std::vector<double> V_atoms;
  /// Raw path maxima T(x) above the collection threshold, in visiting order.
  std::vector<double> T_atoms;
  std::vector<StoppingLineRecord> line;

  /// Suplog: leaves with T(x) <= y_n whose V(x) is above the threshold.
  /// Sublog: leaves of B_n (L(T) <= n log m / 2) with V above the threshold.
  std::uint64_t negligible_above = 0;
  /// Suplog: leaves of A_n^(3) (not A1, not A2, T <= b_n - z_n) above the threshold.
  std::uint64_t a3_above = 0;
  /// Suplog: no leaf has two path displacements >= y_n (A_n^(2) empty).
  bool a2_empty = true;
  /// Some leaf has two path displacements above the stopping-line level.
  bool multi_crossing = false;
  /// Suplog M_n^(A) = max |V - T| over leaves outside A_n; sublog
  /// M_n^(B) = max L(V) - L(T) over leaves with L(T) > 3 n log m / 4.
  /// Empty when no leaf qualifies.
  std::optional<double> gap_max;
  std::uint64_t nodes_visited = 0;

  bool survived() const { return Z_n > 0; }
  /// Applicability event of the stopping-line identity.
  bool line_identity_applicable() const { return a2_empty && !multi_crossing; }
};

/// Thresholds of one (config, scale) pair, all on the raw displacement scale.
struct EngineLevels {
  double collect;  // atoms with value > collect are kept
  double line;     // stopping line: displacement > line
  double big;      // suplog y_n; sublog L^{-1}(n log m / 2)
  double gap_floor;  // sublog: L^{-1}(3 n log m / 4)
};
EngineLevels engine_levels(const BRWConfig& config, const Scale& scale);

using DisplacementSampler = std::function<double(Engine&)>;

/// One depth-first pass over the tree, explicit stack, memory O(n + atoms).
/// Throws NodeCapExceeded past config.node_cap visited nodes.
ExtremalSnapshot simulate_tree(const BRWConfig& config, const Scale& scale, Engine& g);
/// Same traversal with a caller-provided displacement sampler.
ExtremalSnapshot simulate_tree(const BRWConfig& config, const Scale& scale, Engine& g,
                               const DisplacementSampler& sampler);

struct IdentityCheck {
  bool applicable = false;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string reason;  // set when not applicable
};

/// sum_{|x|=n} f(norm T(x)) against sum_{v in line} f(norm X_v) E(v).
/// f must be supported above both the collection threshold and the line level
/// on the normalized scale (throws otherwise).
IdentityCheck stopping_line_identity_check(const ExtremalSnapshot& snap, const StepFunction& f,
                                           const BRWConfig& config, const Scale& scale);

struct SuplogMode {
  double b, a;
};
struct SublogMode {
  const TailFunction* L;
  double level;
};
struct RecenterAtMax {};
using NormalizeMode = std::variant<SuplogMode, SublogMode, RecenterAtMax>;

std::vector<double> normalize_atoms(std::span<const double> atoms, const NormalizeMode& mode);
/// Mode of the scale: SuplogMode{b, a} or SublogMode{&L, n log m}.
NormalizeMode normalize_mode(const BRWConfig& config, const Scale& scale);
double normalize_value(double raw, const NormalizeMode& mode);

struct ReplicateOutcome {
  std::optional<ExtremalSnapshot> snapshot;
  bool cap_exceeded = false;
};

struct BatchSummary {
  std::size_t replicates = 0;
  std::size_t survivors = 0;
  std::size_t flagged = 0;
  double mean_Z_n = 0.0;
  /// M_n quantiles over survivors at 5%, 25%, 50%, 75%, 95%.
  std::vector<double> M_n_quantiles;
};

struct BatchResult {
  std::vector<ReplicateOutcome> replicates;
  BatchSummary summary;
};

/// R replicates, replicate r on stream make_stream(seed, r); identical output
/// for every thread count.
BatchResult batch_simulate(const BRWConfig& config, const Scale& scale, std::size_t R,
                           unsigned threads, std::uint64_t seed);

/// Runs job(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

}  // namespace lsv
