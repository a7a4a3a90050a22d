#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dyncond/types.hpp"

namespace dyncond {

/// Deterministic random source. mt19937_64 has a standard-mandated
/// sequence and the double conversion avoids std::uniform_real_distribution,
/// whose output is implementation defined, so streams are identical on
/// every platform.
class random_source {
public:
  explicit random_source(std::uint64_t seed) : m_gen(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(m_gen() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], both ends included.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }

private:
  std::mt19937_64 m_gen;
};

enum class net_family { diamond_ladder, adder, random_loopy };

/// Everything a generator needs to build a network reproducibly.
struct generator_spec {
  net_family family = net_family::random_loopy;
  int size = 4;  ///< ladder rungs, adder bits, or variable count
  std::uint64_t seed = 0;
  int card_min = 2;
  int card_max = 2;
  int max_parents = 3;      ///< random family only
  int extra_edges = 2;      ///< random family: arcs beyond the spanning tree
  double noise = 0.0;       ///< adder family: gate output flip probability
  bool inject_zeros = false;  ///< random family: allow exact zeros in rows
};

namespace detail {

inline std::vector<std::string> value_labels(int card) {
  if (card == 2) return {"t", "f"};
  std::vector<std::string> names;
  for (int i = 0; i < card; ++i) names.push_back("v" + std::to_string(i));
  return names;
}

inline variable make_var(var_id id, std::string name, int card) {
  return {id, std::move(name), card, value_labels(card)};
}

/// One random CPT row. Entries are floored at 0.02 and normalized; when a
/// zero is injected one entry is exactly 0 and the floor applies to the
/// rest.
inline void random_row(random_source& rng, int card, bool inject_zero,
                       std::vector<double>& out) {
  std::vector<double> raw(static_cast<std::size_t>(card));
  for (double& u : raw) u = rng.uniform();
  int zero_at = -1;
  if (inject_zero && rng.uniform() < 0.1)
    zero_at = rng.uniform_int(0, card - 1);
  double total = 0.0;
  int live = 0;
  for (int i = 0; i < card; ++i) {
    if (i == zero_at) continue;
    total += raw[static_cast<std::size_t>(i)];
    ++live;
  }
  const double floor = 0.02;
  for (int i = 0; i < card; ++i) {
    if (i == zero_at) {
      out.push_back(0.0);
    } else if (total == 0.0) {
      out.push_back(1.0 / live);
    } else {
      out.push_back((1.0 - live * floor) *
                        (raw[static_cast<std::size_t>(i)] / total) +
                    floor);
    }
  }
}

/// Two-valued row (p, 1 - p) with p drawn away from the extremes.
inline void binary_row(random_source& rng, std::vector<double>& out) {
  double p = rng.uniform(0.05, 0.95);
  out.push_back(p);
  out.push_back(1.0 - p);
}

}  // namespace detail

/// Chain of k diamonds: spine A0..Ak where each consecutive pair is
/// connected through a fresh fork, A(i-1) -> Bi, A(i-1) -> Ci and
/// {Bi, Ci} -> Ai. 3k + 1 binary variables, k overlapping loops.
inline network diamond_ladder(int rungs, std::uint64_t seed) {
  if (rungs < 1) throw model_error("diamond_ladder needs at least one rung");
  random_source rng(seed);
  std::vector<variable> vars;
  std::vector<cpt> cpts;
  auto add = [&](const std::string& name, std::vector<var_id> parents) {
    var_id id = static_cast<var_id>(vars.size());
    vars.push_back(detail::make_var(id, name, 2));
    cpt c;
    c.child = id;
    c.parents = std::move(parents);
    c.width = 2;
    std::size_t rows = std::size_t{1} << c.parents.size();
    for (std::size_t r = 0; r < rows; ++r) detail::binary_row(rng, c.table);
    cpts.push_back(std::move(c));
    return id;
  };

  var_id spine = add("A0", {});
  for (int i = 1; i <= rungs; ++i) {
    var_id b = add("B" + std::to_string(i), {spine});
    var_id c = add("C" + std::to_string(i), {spine});
    spine = add("A" + std::to_string(i), {b, c});
  }
  return network(std::move(vars), std::move(cpts));
}

/// An n-bit ripple-carry adder over uncertain inputs. Per bit i the
/// variables In1_i and In2_i are roots and Sum_i / Carry_i compute parity
/// and majority of {In1_i, In2_i, Carry_(i-1)}. With noise > 0 each gate
/// output is flipped with that probability. 4n binary variables; every
/// stage is multiply connected because Sum_i and Carry_i share parents.
inline network n_bit_adder(int bits, double noise, std::uint64_t seed) {
  if (bits < 1) throw model_error("n_bit_adder needs at least one bit");
  if (noise < 0.0 || noise >= 0.5)
    throw model_error("adder noise must lie in [0, 0.5)");
  random_source rng(seed);
  std::vector<variable> vars;
  std::vector<cpt> cpts;

  auto add_root = [&](const std::string& name) {
    var_id id = static_cast<var_id>(vars.size());
    vars.push_back(detail::make_var(id, name, 2));
    cpt c;
    c.child = id;
    c.width = 2;
    detail::binary_row(rng, c.table);
    cpts.push_back(std::move(c));
    return id;
  };
  // Value index 0 is "t". A gate row puts mass 1 - noise on the correct
  // output for its parent instantiation.
  auto add_gate = [&](const std::string& name, std::vector<var_id> parents,
                      auto&& truth) {
    var_id id = static_cast<var_id>(vars.size());
    vars.push_back(detail::make_var(id, name, 2));
    cpt c;
    c.child = id;
    c.parents = std::move(parents);
    c.width = 2;
    std::size_t rows = std::size_t{1} << c.parents.size();
    for (std::size_t r = 0; r < rows; ++r) {
      bool out = truth(r, c.parents.size());
      double p_true = out ? 1.0 - noise : noise;
      c.table.push_back(p_true);
      c.table.push_back(1.0 - p_true);
    }
    cpts.push_back(std::move(c));
    return id;
  };
  auto bit_of = [](std::size_t row, std::size_t n_parents, std::size_t k) {
    // Parent k's value in this row; value index 0 means true.
    std::size_t shift = n_parents - 1 - k;
    return ((row >> shift) & 1) == 0;
  };

  var_id carry = -1;
  for (int i = 0; i < bits; ++i) {
    std::string suffix = std::to_string(i);
    var_id in1 = add_root("In1_" + suffix);
    var_id in2 = add_root("In2_" + suffix);
    std::vector<var_id> gate_parents = {in1, in2};
    if (carry >= 0) gate_parents.push_back(carry);
    add_gate("Sum_" + suffix, gate_parents,
             [&](std::size_t row, std::size_t n) {
               bool acc = false;
               for (std::size_t k = 0; k < n; ++k) acc ^= bit_of(row, n, k);
               return acc;
             });
    carry = add_gate("Carry_" + suffix, gate_parents,
                     [&](std::size_t row, std::size_t n) {
                       int trues = 0;
                       for (std::size_t k = 0; k < n; ++k)
                         trues += bit_of(row, n, k);
                       return trues >= 2;
                     });
  }
  return network(std::move(vars), std::move(cpts));
}

/// Random connected DAG: a spanning tree over the declaration order plus
/// extra arcs, with cardinalities drawn from the spec's range.
inline network random_network(const generator_spec& spec) {
  if (spec.size < 1) throw model_error("random_network needs variables");
  if (spec.card_min < 2 || spec.card_max < spec.card_min)
    throw model_error("invalid cardinality range");
  if (spec.max_parents < 1)
    throw model_error("max_parents must be at least 1");
  random_source rng(spec.seed);
  const int n = spec.size;

  std::vector<int> cards(static_cast<std::size_t>(n));
  for (int& c : cards) c = rng.uniform_int(spec.card_min, spec.card_max);

  std::vector<std::vector<var_id>> parents(static_cast<std::size_t>(n));
  for (int v = 1; v < n; ++v)
    parents[static_cast<std::size_t>(v)].push_back(rng.uniform_int(0, v - 1));

  int placed = 0;
  int attempts = 0;
  const int attempt_limit = 20 * (spec.extra_edges + 1);
  while (placed < spec.extra_edges && attempts < attempt_limit) {
    ++attempts;
    if (n < 2) break;
    int v = rng.uniform_int(1, n - 1);
    int u = rng.uniform_int(0, v - 1);
    auto& ps = parents[static_cast<std::size_t>(v)];
    if (static_cast<int>(ps.size()) >= spec.max_parents) continue;
    if (std::find(ps.begin(), ps.end(), u) != ps.end()) continue;
    ps.push_back(u);
    ++placed;
  }

  std::vector<variable> vars;
  std::vector<cpt> cpts;
  for (int v = 0; v < n; ++v) {
    vars.push_back(detail::make_var(v, "X" + std::to_string(v),
                                    cards[static_cast<std::size_t>(v)]));
    auto ps = parents[static_cast<std::size_t>(v)];
    std::sort(ps.begin(), ps.end());
    cpt c;
    c.child = v;
    c.parents = ps;
    c.width = cards[static_cast<std::size_t>(v)];
    std::size_t rows = 1;
    for (var_id p : ps)
      rows *= static_cast<std::size_t>(cards[static_cast<std::size_t>(p)]);
    for (std::size_t r = 0; r < rows; ++r)
      detail::random_row(rng, c.width, spec.inject_zeros, c.table);
    cpts.push_back(std::move(c));
  }
  return network(std::move(vars), std::move(cpts));
}

/// Dispatch on the spec's family.
inline network generate(const generator_spec& spec) {
  switch (spec.family) {
    case net_family::diamond_ladder:
      return diamond_ladder(spec.size, spec.seed);
    case net_family::adder:
      return n_bit_adder(spec.size, spec.noise, spec.seed);
    case net_family::random_loopy:
      return random_network(spec);
  }
  throw model_error("unknown generator family");
}

}  // namespace dyncond
