#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dyncond/types.hpp"

namespace dyncond {

/// Largest joint state space the exhaustive oracle will enumerate.
inline constexpr std::uint64_t enumeration_guard = std::uint64_t{1} << 24;

namespace detail {

inline void check_enumeration_guard(const network& net) {
  std::uint64_t states = 1;
  for (const variable& v : net.variables()) {
    states *= static_cast<std::uint64_t>(v.cardinality);
    if (states > enumeration_guard)
      throw enumeration_error(
          "joint state space of " + std::to_string(net.size()) +
          " variables exceeds the enumeration guard of 2^24 states");
  }
}

struct enumeration_pass {
  const network& net;
  const instantiation& evidence;
  const assumption_set* possible;
  const std::vector<var_id>& order;
  std::vector<int> vals;
  std::vector<support_vector> marginals;

  enumeration_pass(const network& n, const instantiation& e,
                   const assumption_set* mask, const std::vector<var_id>& ord)
      : net(n), evidence(e), possible(mask), order(ord),
        vals(static_cast<std::size_t>(n.size()), -1) {
    marginals.reserve(static_cast<std::size_t>(n.size()));
    for (const variable& v : n.variables())
      marginals.push_back(support_vector::zeros(v.id, v.cardinality));
  }

  /// Total probability mass below this depth given the product of CPT
  /// entries fixed so far. Accumulates each variable's marginal at its
  /// own depth on the way.
  double walk(std::size_t depth, double product) {
    if (depth == order.size()) return product;
    const var_id v = order[depth];
    const cpt& c = net.cpt_of(v);
    std::size_t row = 0;
    for (var_id p : c.parents)
      row = row * static_cast<std::size_t>(net.var(p).cardinality) +
            static_cast<std::size_t>(vals[static_cast<std::size_t>(p)]);
    const auto fixed = evidence.get(v);
    double total = 0.0;
    for (int x = 0; x < c.width; ++x) {
      if (fixed && *fixed != x) continue;
      if (possible && !possible->possible(v, x)) continue;
      const double next = product * c.entry(row, x);
      if (next == 0.0) continue;
      vals[static_cast<std::size_t>(v)] = x;
      const double mass = walk(depth + 1, next);
      marginals[static_cast<std::size_t>(v)][x] += mass;
      total += mass;
    }
    return total;
  }
};

}  // namespace detail

/// Unnormalized beliefs of every variable by exhaustive enumeration:
/// entry x of vector v is Pr(v = x and evidence), summed only over full
/// states where every variable takes a possible value when a mask is
/// given. Guarded against state spaces beyond 2^24.
inline std::vector<support_vector> oracle_all_marginals(
    const network& net, const instantiation& evidence,
    const assumption_set* possible = nullptr) {
  detail::check_enumeration_guard(net);
  const std::vector<var_id> order = topological_order(net);
  detail::enumeration_pass pass(net, evidence, possible, order);
  pass.walk(0, 1.0);
  return pass.marginals;
}

/// Unnormalized belief of one variable: entry x is Pr(X = x and evidence).
inline support_vector oracle_marginal(const network& net,
                                      const instantiation& evidence,
                                      var_id x) {
  return oracle_all_marginals(net, evidence)[static_cast<std::size_t>(x)];
}

/// Belief of one variable restricted to states where every variable takes
/// a value the assumption set considers possible.
inline support_vector oracle_marginal(const network& net,
                                      const instantiation& evidence,
                                      var_id x,
                                      const assumption_set& possible) {
  return oracle_all_marginals(net, evidence,
                              &possible)[static_cast<std::size_t>(x)];
}

/// Probability of the evidence itself.
inline double oracle_evidence_mass(const network& net,
                                   const instantiation& evidence) {
  if (net.size() == 0) return 1.0;
  return oracle_all_marginals(net, evidence)[0].sum();
}

}  // namespace dyncond
