#include "lsvbrw/brw_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Frame {
  int depth;
  int big;       // path displacements >= levels.big (suplog) / > levels.big (sublog)
  int crossings;  // path displacements above the line level, capped at 2
  std::int64_t owner;  // index of the first line vertex on the path, -1 if none
  double V;
  double T;
};

struct PendingLine {
  int depth;
  double X;
  std::uint64_t count;
};

template <class Sampler>
ExtremalSnapshot traverse(const BRWConfig& config, const EngineLevels& lv, Engine& g,
                          Sampler&& sample) {
  const bool suplog = config.regime == Regime::Suplogarithmic;
  const int n = config.n;
  ExtremalSnapshot snap;
  snap.n = n;
  snap.M_n = -kInf;
  snap.T_max = -kInf;

  std::vector<PendingLine> pending;
  std::vector<Frame> stack;
  std::vector<Frame> children;
  stack.push_back({0, 0, 0, -1, 0.0, -kInf});
  std::uint64_t visited = 0;
  double gap = -kInf;

  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (++visited > config.node_cap) throw NodeCapExceeded(config.node_cap);

    if (f.depth == n) {
      ++snap.Z_n;
      if (f.V > snap.M_n) snap.M_n = f.V;
      if (f.T > snap.T_max) snap.T_max = f.T;
      const bool v_above = f.V > lv.collect;
      if (v_above) snap.V_atoms.push_back(f.V);
      if (f.T > lv.collect) snap.T_atoms.push_back(f.T);
      if (f.owner >= 0) ++pending[static_cast<std::size_t>(f.owner)].count;
      if (f.crossings >= 2) snap.multi_crossing = true;

      if (suplog) {
        const bool a1 = f.T <= lv.big;
        const bool a2 = f.big >= 2;
        const bool a3 = !a1 && !a2 && f.T <= lv.line;
        if (a2) snap.a2_empty = false;
        if (a1 && v_above) ++snap.negligible_above;
        if (a3 && v_above) ++snap.a3_above;
        if (!a1 && !a2 && !a3) gap = std::max(gap, std::abs(f.V - f.T));
      } else {
        if (f.T <= lv.big && v_above) ++snap.negligible_above;
        if (f.T > lv.gap_floor) {
          const double d = std::isinf(f.T) ? 0.0
                                           : config.displacement.tail(f.V) -
                                                 config.displacement.tail(f.T);
          gap = std::max(gap, d);
        }
      }
      continue;
    }

    const std::uint64_t k = config.offspring.sample(g);
    children.clear();
    for (std::uint64_t i = 0; i < k; ++i) {
      const double X = sample(g);
      Frame c{f.depth + 1, f.big, f.crossings, f.owner, f.V + X, std::max(f.T, X)};
      if (suplog ? X >= lv.big : X > lv.big) ++c.big;
      if (X > lv.line) {
        if (c.crossings == 0) {
          c.owner = static_cast<std::int64_t>(pending.size());
          pending.push_back({c.depth, X, 0});
        }
        c.crossings = std::min(c.crossings + 1, 2);
      }
      children.push_back(c);
    }
    // First drawn child is visited first.
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }

  snap.nodes_visited = visited;
  for (const auto& p : pending)
    if (p.count > 0) snap.line.push_back({p.depth, p.X, p.count});
  if (gap > -kInf) snap.gap_max = gap;
  return snap;
}

}  // namespace

void BRWConfig::validate() const {
  if (n < 1) throw Error("generation n must be >= 1");
  if (regime != displacement.regime)
    throw Error("regime mismatch: config says " + std::string(to_string(regime)) +
                ", displacement law is " + std::string(to_string(displacement.regime)));
  if (offspring.mean() <= 1.0) throw Error("offspring law must be supercritical");
  if (node_cap == 0) throw Error("node cap must be positive");
}

Scale make_scale(const BRWConfig& config) {
  config.validate();
  const double m = config.offspring.mean();
  if (config.regime == Regime::Suplogarithmic)
    return compute_norm_seq(config.displacement, m, config.n, config.line_params);
  return SublogScale{m, config.n, sublog_level(m, config.n)};
}

EngineLevels engine_levels(const BRWConfig& config, const Scale& scale) {
  EngineLevels lv{};
  if (const auto* s = std::get_if<NormSeq>(&scale)) {
    if (config.regime != Regime::Suplogarithmic) throw Error("regime mismatch: scale is suplog");
    lv.collect = s->b + config.window_lower * s->a;
    lv.line = s->b - s->z;
    lv.big = s->y;
    lv.gap_floor = lv.line;
  } else {
    const auto& s2 = std::get<SublogScale>(scale);
    if (config.regime != Regime::Sublogarithmic) throw Error("regime mismatch: scale is sublog");
    const auto& L = config.displacement.tail;
    const double lo = std::max(0.0, s2.level + config.window_lower);
    lv.collect = s2.level + config.window_lower <= 0.0 ? -kInf : L.inverse(lo);
    lv.line = L.inverse(0.75 * s2.level);
    lv.big = L.inverse(0.5 * s2.level);
    lv.gap_floor = lv.line;
    if (std::isinf(lv.line) || (lv.collect == kInf && std::isfinite(config.window_lower)))
      throw Error("sublog levels overflow the double range; reduce n");
  }
  return lv;
}

ExtremalSnapshot simulate_tree(const BRWConfig& config, const Scale& scale, Engine& g) {
  config.validate();
  const EngineLevels lv = engine_levels(config, scale);
  const DisplacementLaw& law = config.displacement;
  return traverse(config, lv, g, [&law](Engine& e) { return sample_displacement(law, e); });
}

ExtremalSnapshot simulate_tree(const BRWConfig& config, const Scale& scale, Engine& g,
                               const DisplacementSampler& sampler) {
  config.validate();
  const EngineLevels lv = engine_levels(config, scale);
  return traverse(config, lv, g, sampler);
}

NormalizeMode normalize_mode(const BRWConfig& config, const Scale& scale) {
  if (const auto* s = std::get_if<NormSeq>(&scale)) return SuplogMode{s->b, s->a};
  return SublogMode{&config.displacement.tail, std::get<SublogScale>(scale).level};
}

double normalize_value(double raw, const NormalizeMode& mode) {
  if (const auto* s = std::get_if<SuplogMode>(&mode)) return (raw - s->b) / s->a;
  if (const auto* s = std::get_if<SublogMode>(&mode)) return (*s->L)(raw) - s->level;
  throw Error("recenter-at-max needs the whole atom list");
}

std::vector<double> normalize_atoms(std::span<const double> atoms, const NormalizeMode& mode) {
  std::vector<double> out;
  out.reserve(atoms.size());
  if (std::holds_alternative<RecenterAtMax>(mode)) {
    if (atoms.empty()) return out;
    const double mx = *std::max_element(atoms.begin(), atoms.end());
    for (double x : atoms) out.push_back(x - mx);
    return out;
  }
  for (double x : atoms) out.push_back(normalize_value(x, mode));
  return out;
}

IdentityCheck stopping_line_identity_check(const ExtremalSnapshot& snap, const StepFunction& f,
                                           const BRWConfig& config, const Scale& scale) {
  const NormalizeMode mode = normalize_mode(config, scale);
  double line_norm;
  if (const auto* s = std::get_if<NormSeq>(&scale))
    line_norm = -s->z / s->a;
  else
    line_norm = -0.25 * std::get<SublogScale>(scale).level;
  const double floor = std::max(config.window_lower, line_norm);
  if (f.support_lower() < floor)
    throw Error("test function must vanish below " + std::to_string(floor) +
                " (collection threshold and line level)");

  IdentityCheck out;
  if (!snap.line_identity_applicable()) {
    out.reason = !snap.a2_empty ? "identity not applicable: A2 non-empty"
                                : "identity not applicable: path with two line crossings";
    return out;
  }
  out.applicable = true;
  for (double t : snap.T_atoms) out.lhs += f(normalize_value(t, mode));
  for (const auto& r : snap.line) {
    const double v = f(normalize_value(r.displacement, mode));
    if (v != 0.0) out.rhs += v * static_cast<double>(r.descendants);
  }
  return out;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& job) {
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  std::size_t first_index = count;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_index) {
          first_index = i;
          first = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  if (std::isinf(s[lo]) || std::isinf(s[hi])) return s[hi];
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

BatchResult batch_simulate(const BRWConfig& config, const Scale& scale, std::size_t R,
                           unsigned threads, std::uint64_t seed) {
  if (R == 0) throw Error("replicate count must be >= 1");
  config.validate();
  const EngineLevels lv = engine_levels(config, scale);
  const DisplacementLaw& law = config.displacement;

  BatchResult out;
  out.replicates.resize(R);
  parallel_for(R, threads, [&](std::size_t r) {
    Engine g = make_stream(seed, r);
    try {
      out.replicates[r].snapshot =
          traverse(config, lv, g, [&law](Engine& e) { return sample_displacement(law, e); });
    } catch (const NodeCapExceeded&) {
      out.replicates[r].cap_exceeded = true;
    }
  });

  auto& s = out.summary;
  s.replicates = R;
  std::vector<double> maxima;
  double z_sum = 0.0;
  std::size_t done = 0;
  for (const auto& rep : out.replicates) {
    if (rep.cap_exceeded) {
      ++s.flagged;
      continue;
    }
    ++done;
    z_sum += static_cast<double>(rep.snapshot->Z_n);
    if (rep.snapshot->survived()) {
      ++s.survivors;
      maxima.push_back(rep.snapshot->M_n);
    }
  }
  s.mean_Z_n = done > 0 ? z_sum / static_cast<double>(done) : 0.0;
  std::sort(maxima.begin(), maxima.end());
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) s.M_n_quantiles.push_back(quantile_sorted(maxima, p));
  return out;
}

}  // namespace lsv
