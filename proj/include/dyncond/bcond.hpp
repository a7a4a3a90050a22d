#pragma once

/// Approximate inference with guaranteed bounds. A cutoff turns every
/// sufficiently small table entry into a logical impossibility; forward
/// possibility propagation over those impossibilities derives value
/// assumptions; exact inference with assumption-pruned summations then
/// yields Pr(x and e and a), a lower bound on Pr(x and e), and the mass
/// the assumptions discarded converts it into an upper bound.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dyncond/dynamic.hpp"
#include "dyncond/oracle.hpp"
#include "dyncond/types.hpp"

namespace dyncond {

/// One conditional-probability entry declared impossible: value `value`
/// of variable `child` under the parent instantiation that row `row` of
/// the child's table encodes.
struct impossible_entry {
  var_id child = 0;
  std::size_t row = 0;
  int value = 0;

  friend auto operator<=>(const impossible_entry&,
                          const impossible_entry&) = default;
};

/// Every table entry at or below a cutoff, read as impossible.
struct abstraction {
  double epsilon = 0.0;
  /// Sorted by (child, row, value).
  std::vector<impossible_entry> entries;

  bool impossible(var_id child, std::size_t row, int value) const {
    return std::binary_search(entries.begin(), entries.end(),
                              impossible_entry{child, row, value});
  }
};

/// Scan every table for entries with probability <= epsilon; the
/// comparison is closed, so entries exactly at the cutoff are included.
/// A cutoff of zero keeps only exact zeros. A cutoff of one or more
/// would declare everything impossible and is rejected, as are negative
/// and non-finite cutoffs.
inline abstraction abstract_network(const network& net, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw model_error("abstraction cutoff must lie in [0, 1)");
  abstraction out;
  out.epsilon = epsilon;
  for (var_id v = 0; v < net.size(); ++v) {
    const cpt& table = net.cpt_of(v);
    const int card = net.var(v).cardinality;
    for (std::size_t r = 0; r < table.row_count(); ++r)
      for (int x = 0; x < card; ++x)
        if (table.entry(r, x) <= epsilon) out.entries.push_back({v, r, x});
  }
  return out;  // the scan emits (child, row, value) in ascending order
}

/// Forward possibility propagation over an abstraction. A root value
/// stays possible when the root evidence allows it and its prior entry
/// is not abstracted away; any other value stays possible when some
/// instantiation of its parents — every parent value itself possible —
/// reaches it through a surviving table entry. The complements of the
/// possible sets are the assumptions. The walk is one topological pass:
/// impossibility only ever flows from parents to children.
///
/// Evidence here may name root variables only; anything else is the
/// caller mixing in observations the propagation cannot use. A variable
/// left with no possible value at all means the cutoff contradicts the
/// evidence (or the network outright), and that is reported rather than
/// returned.
inline assumption_set zero_rank_propagation(
    const abstraction& abst, const network& net,
    const instantiation& root_evidence = {}) {
  for (const auto& [v, x] : root_evidence.items()) {
    if (v < 0 || v >= net.size())
      throw model_error("evidence names an unknown variable");
    if (x < 0 || x >= net.var(v).cardinality)
      throw model_error("evidence value out of range for " + net.var(v).name);
    if (!net.parents(v).empty())
      throw model_error("possibility propagation accepts evidence on roots "
                        "only; '" +
                        net.var(v).name + "' has parents");
  }
  assumption_set possible(net);
  for (var_id x : topological_order(net)) {
    const variable& vx = net.var(x);
    const std::vector<var_id>& parents = net.parents(x);
    const cpt& table = net.cpt_of(x);
    std::vector<char> reachable(static_cast<std::size_t>(vx.cardinality), 0);
    if (parents.empty()) {
      for (int v = 0; v < vx.cardinality; ++v) {
        if (root_evidence.contains(x) && root_evidence.at(x) != v) continue;
        if (abst.impossible(x, 0, v)) continue;
        reachable[static_cast<std::size_t>(v)] = 1;
      }
    } else {
      std::vector<int> combo(parents.size(), 0);
      for (std::size_t r = 0; r < table.row_count(); ++r) {
        std::size_t rest = r;
        for (std::size_t i = parents.size(); i-- > 0;) {
          const auto card =
              static_cast<std::size_t>(net.var(parents[i]).cardinality);
          combo[i] = static_cast<int>(rest % card);
          rest /= card;
        }
        bool parents_possible = true;
        for (std::size_t i = 0; i < parents.size() && parents_possible; ++i)
          parents_possible = possible.possible(parents[i], combo[i]);
        if (!parents_possible) continue;
        for (int v = 0; v < vx.cardinality; ++v)
          if (!abst.impossible(x, r, v))
            reachable[static_cast<std::size_t>(v)] = 1;
      }
    }
    bool any = false;
    for (int v = 0; v < vx.cardinality; ++v) {
      if (reachable[static_cast<std::size_t>(v)] != 0) {
        any = true;
        continue;
      }
      possible.rule_out(x, v);
    }
    if (!any)
      throw abstraction_error("every value of variable '" + vx.name +
                              "' is ruled out by the abstraction; lower the "
                              "cutoff");
  }
  return possible;
}

/// Which machinery evaluates a pruned query.
enum class pruned_backend { dynamic, enumeration };

/// Pr(X = x and evidence and assumptions) for every value x: exact
/// inference in which every summation skips ruled-out values. A query
/// value that is itself ruled out yields a zero entry, not an error.
/// When `stats` is given and the dynamic backend runs, the engine's
/// counters are copied out.
inline support_vector pruned_belief(
    const network& net, var_id x, const instantiation& evidence,
    const assumption_set& assumptions,
    pruned_backend backend = pruned_backend::dynamic,
    engine_stats* stats = nullptr) {
  if (backend == pruned_backend::enumeration)
    return oracle_marginal(net, evidence, x, assumptions);
  dynamic_engine engine(net, evidence, find_loop_cutset(net), true,
                        &assumptions);
  support_vector out = engine.belief(x);
  if (stats != nullptr) *stats = engine.stats();
  return out;
}

/// Per-value probability bounds from one pruned query:
///
///   lower(x) = Pr(x and e and a) <= Pr(x and e)
///   upper(x) = lower(x) + lost_mass
///   lost_mass = 1 - sum_y lower(y)
///
/// The inequality holds for any assumption set whatsoever; assumption
/// quality affects only how tight the interval is.
struct belief_bounds {
  support_vector lower;
  support_vector upper;
  double lost_mass = 0.0;
  /// The bound stays valid under evidence on non-root variables, but
  /// the possibility propagation never sees such evidence, so the
  /// interval may be loose; front ends use this flag to warn.
  bool non_root_evidence = false;
};

/// Bounds plus the assumptions and the work that produced them.
struct bounded_belief_result {
  belief_bounds bounds;
  assumption_set assumptions;
  int assumption_count = 0;
  std::uint64_t messages_computed = 0;
};

/// The full pipeline for one cutoff: abstract the tables, propagate
/// possibility from the roots (only the root-assigned part of the
/// evidence participates), prune-and-infer, convert to bounds.
inline bounded_belief_result bounded_belief(const network& net, var_id x,
                                            const instantiation& evidence,
                                            double epsilon) {
  for (const auto& [v, value] : evidence.items()) {
    if (v < 0 || v >= net.size())
      throw model_error("evidence names an unknown variable");
    if (value < 0 || value >= net.var(v).cardinality)
      throw model_error("evidence value out of range for " + net.var(v).name);
  }
  abstraction abst = abstract_network(net, epsilon);
  instantiation root_evidence;
  bool non_root = false;
  for (const auto& [v, value] : evidence.items()) {
    if (net.parents(v).empty())
      root_evidence.set(v, value);
    else
      non_root = true;
  }
  bounded_belief_result out;
  out.assumptions = zero_rank_propagation(abst, net, root_evidence);
  out.assumption_count = out.assumptions.ruled_out_count();
  engine_stats stats;
  out.bounds.lower = pruned_belief(net, x, evidence, out.assumptions,
                                   pruned_backend::dynamic, &stats);
  out.messages_computed = stats.messages_computed;
  out.bounds.lost_mass = 1.0 - out.bounds.lower.sum();
  out.bounds.upper = out.bounds.lower;
  for (int v = 0; v < out.bounds.upper.card(); ++v)
    out.bounds.upper[v] += out.bounds.lost_mass;
  out.bounds.non_root_evidence = non_root;
  return out;
}

/// One row of a cutoff sweep.
struct sweep_row {
  double epsilon = 0.0;
  belief_bounds bounds;
  int assumption_count = 0;
  std::uint64_t messages_computed = 0;
};

/// Run bounded_belief once per cutoff, largest first — start loose and
/// tighten until the interval satisfies. Cutoffs must arrive sorted
/// descending; abstraction monotonicity then makes assumption counts
/// and lost mass non-increasing down the rows.
inline std::vector<sweep_row> epsilon_sweep(const network& net, var_id x,
                                            const instantiation& evidence,
                                            const std::vector<double>& epsilons) {
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (epsilons[i] > epsilons[i - 1])
      throw model_error("sweep cutoffs must be sorted in descending order");
  std::vector<sweep_row> rows;
  rows.reserve(epsilons.size());
  for (double eps : epsilons) {
    bounded_belief_result r = bounded_belief(net, x, evidence, eps);
    rows.push_back(
        {eps, std::move(r.bounds), r.assumption_count, r.messages_computed});
  }
  return rows;
}

}  // namespace dyncond
