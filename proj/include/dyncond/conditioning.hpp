#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyncond/polytree.hpp"
#include "dyncond/types.hpp"

namespace dyncond {

/// Which arcs conditioning on a cutset absorbs. Depends only on the
/// cutset, not on its values.
///
/// Absorption removes outgoing arcs of cutset variables, but never an arc
/// whose removal would split a connected component: evidence must keep a
/// path along which to travel. The scan order is deterministic, cutset
/// variables by ascending id and each variable's children by descending
/// id, so repeated runs absorb the same arcs.
struct conditioned_structure {
  std::vector<var_id> cutset;  ///< sorted ascending
  std::vector<std::pair<var_id, var_id>> absorbed_arcs;
  std::vector<std::vector<var_id>> frame_parents;     ///< retained, original order
  std::vector<std::vector<var_id>> absorbed_parents;  ///< removed, original order
  std::vector<std::vector<var_id>> frame_children;

  bool is_absorbed(var_id from, var_id to) const {
    return std::find(absorbed_arcs.begin(), absorbed_arcs.end(),
                     std::make_pair(from, to)) != absorbed_arcs.end();
  }
};

namespace detail {

inline std::vector<var_id> checked_cutset(const network& net,
                                          std::vector<var_id> cutset) {
  std::sort(cutset.begin(), cutset.end());
  for (std::size_t i = 0; i < cutset.size(); ++i) {
    if (cutset[i] < 0 || cutset[i] >= net.size())
      throw model_error("cutset names an unknown variable");
    if (i > 0 && cutset[i] == cutset[i - 1])
      throw model_error("cutset repeats variable " +
                        net.var(cutset[i]).name);
  }
  return cutset;
}

}  // namespace detail

inline conditioned_structure condition_structure(
    const network& net, const std::vector<var_id>& cutset_in) {
  conditioned_structure out;
  out.cutset = detail::checked_cutset(net, cutset_in);

  struct arc {
    var_id from, to;
    bool alive = true;
  };
  std::vector<arc> arcs;
  for (var_id v = 0; v < net.size(); ++v)
    for (var_id p : net.parents(v)) arcs.push_back({p, v, true});

  auto still_connected_without = [&](std::size_t skip) {
    detail::disjoint_sets sets(net.size());
    for (std::size_t i = 0; i < arcs.size(); ++i)
      if (arcs[i].alive && i != skip) sets.unite(arcs[i].from, arcs[i].to);
    return sets.find(arcs[skip].from) == sets.find(arcs[skip].to);
  };

  for (var_id k : out.cutset) {
    std::vector<var_id> kids = net.children(k);
    std::sort(kids.begin(), kids.end(), std::greater<>());
    for (var_id child : kids) {
      for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (!arcs[i].alive || arcs[i].from != k || arcs[i].to != child)
          continue;
        if (still_connected_without(i)) {
          arcs[i].alive = false;
          out.absorbed_arcs.emplace_back(k, child);
        }
      }
    }
  }

  out.frame_parents.assign(static_cast<std::size_t>(net.size()), {});
  out.absorbed_parents.assign(static_cast<std::size_t>(net.size()), {});
  out.frame_children.assign(static_cast<std::size_t>(net.size()), {});
  for (var_id v = 0; v < net.size(); ++v) {
    for (var_id p : net.parents(v)) {
      if (out.is_absorbed(p, v))
        out.absorbed_parents[static_cast<std::size_t>(v)].push_back(p);
      else
        out.frame_parents[static_cast<std::size_t>(v)].push_back(p);
    }
  }
  for (var_id v = 0; v < net.size(); ++v)
    for (var_id p : out.frame_parents[static_cast<std::size_t>(v)])
      out.frame_children[static_cast<std::size_t>(p)].push_back(v);
  return out;
}

/// True when conditioning on the cutset leaves a singly connected frame.
inline bool frame_is_singly_connected(const conditioned_structure& s) {
  const int n = static_cast<int>(s.frame_parents.size());
  detail::disjoint_sets sets(n);
  for (var_id v = 0; v < n; ++v)
    for (var_id p : s.frame_parents[static_cast<std::size_t>(v)])
      if (!sets.unite(p, v)) return false;
  return true;
}

inline bool validate_cutset(const network& net,
                            const std::vector<var_id>& cutset) {
  return frame_is_singly_connected(condition_structure(net, cutset));
}

/// A network conditioned on one cutset instantiation: outgoing arcs of
/// cutset variables absorbed, their CPT rows reduced to the rows matching
/// the instantiation, and the instantiation itself carried as evidence.
struct conditioned_network {
  network frame;
  instantiation implied_evidence;
  conditioned_structure structure;
};

/// Conditions with a precomputed structure (the per-instantiation loop of
/// cutset conditioning reuses one structure across all cases).
inline conditioned_network condition(const network& net,
                                     const conditioned_structure& structure,
                                     const instantiation& values) {
  for (var_id k : structure.cutset)
    if (!values.contains(k))
      throw model_error("conditioning values miss cutset variable " +
                        net.var(k).name);
  for (const auto& [v, x] : values.items()) {
    if (!set_contains(structure.cutset, v))
      throw model_error("conditioning values assign non-cutset variable " +
                        net.var(v).name);
    if (x < 0 || x >= net.var(v).cardinality)
      throw model_error("conditioning value out of range for " +
                        net.var(v).name);
  }

  std::vector<variable> vars = net.variables();
  std::vector<cpt> cpts;
  cpts.reserve(vars.size());
  for (var_id v = 0; v < net.size(); ++v) {
    const cpt& original = net.cpt_of(v);
    const auto& absorbed =
        structure.absorbed_parents[static_cast<std::size_t>(v)];
    if (absorbed.empty()) {
      cpts.push_back(original);
      continue;
    }
    cpt reduced;
    reduced.child = v;
    reduced.parents = structure.frame_parents[static_cast<std::size_t>(v)];
    reduced.width = original.width;
    detail::for_each_combination(
        net, original.parents, [&](const std::vector<int>& combo) {
          for (std::size_t i = 0; i < original.parents.size(); ++i)
            if (set_contains(structure.cutset, original.parents[i]) &&
                structure.is_absorbed(original.parents[i], v) &&
                combo[i] != values.at(original.parents[i]))
              return;
          std::size_t row = 0;
          for (std::size_t i = 0; i < combo.size(); ++i)
            row = row * static_cast<std::size_t>(
                            net.var(original.parents[i]).cardinality) +
                  static_cast<std::size_t>(combo[i]);
          for (int x = 0; x < original.width; ++x)
            reduced.table.push_back(original.entry(row, x));
        });
    cpts.push_back(std::move(reduced));
  }

  conditioned_network out{network(std::move(vars), std::move(cpts)), values,
                          structure};
  return out;
}

inline conditioned_network condition(const network& net,
                                     const std::vector<var_id>& cutset,
                                     const instantiation& values) {
  return condition(net, condition_structure(net, cutset), values);
}

/// Greedy loop cutset: among variables on a remaining loop, repeatedly
/// take the one of highest undirected degree (ties to the lowest id) that
/// still has an outgoing arc inside the loopy part, then recompute what
/// conditioning on the grown set leaves behind. Returns a set whose frame
/// is singly connected; empty for polytrees.
inline std::vector<var_id> find_loop_cutset(const network& net) {
  std::vector<var_id> cutset;
  for (int round = 0; round <= net.size(); ++round) {
    conditioned_structure s = condition_structure(net, cutset);

    // Strip leaves to expose the loopy core of the frame skeleton.
    std::vector<int> degree(static_cast<std::size_t>(net.size()), 0);
    for (var_id v = 0; v < net.size(); ++v)
      for (var_id p : s.frame_parents[static_cast<std::size_t>(v)]) {
        ++degree[static_cast<std::size_t>(v)];
        ++degree[static_cast<std::size_t>(p)];
      }
    std::vector<char> in_core(static_cast<std::size_t>(net.size()), 1);
    bool stripped = true;
    while (stripped) {
      stripped = false;
      for (var_id v = 0; v < net.size(); ++v) {
        if (!in_core[static_cast<std::size_t>(v)] ||
            degree[static_cast<std::size_t>(v)] > 1)
          continue;
        in_core[static_cast<std::size_t>(v)] = 0;
        stripped = true;
        for (var_id p : s.frame_parents[static_cast<std::size_t>(v)])
          if (in_core[static_cast<std::size_t>(p)])
            --degree[static_cast<std::size_t>(p)];
        for (var_id c : s.frame_children[static_cast<std::size_t>(v)])
          if (in_core[static_cast<std::size_t>(c)])
            --degree[static_cast<std::size_t>(c)];
        degree[static_cast<std::size_t>(v)] = 0;
      }
    }

    var_id best = -1;
    for (var_id v = 0; v < net.size(); ++v) {
      if (!in_core[static_cast<std::size_t>(v)] ||
          set_contains(cutset, v))
        continue;
      bool has_core_child = false;
      for (var_id c : s.frame_children[static_cast<std::size_t>(v)])
        has_core_child =
            has_core_child || in_core[static_cast<std::size_t>(c)];
      if (!has_core_child) continue;
      if (best < 0 || degree[static_cast<std::size_t>(v)] >
                          degree[static_cast<std::size_t>(best)])
        best = v;
    }
    if (best < 0) {
      bool core_left = false;
      for (char c : in_core) core_left = core_left || c;
      if (core_left)
        throw structural_error(
            "loop cutset search found a loop with no conditionable "
            "variable");
      return cutset;
    }
    cutset.push_back(best);
    std::sort(cutset.begin(), cutset.end());
  }
  throw structural_error("loop cutset search failed to terminate");
}

/// Classical cutset conditioning: enumerate every instantiation of the
/// cutset in canonical order, run the polytree algorithm on each
/// conditioned network, and sum the case beliefs.
struct cutset_result {
  support_vector belief;
  std::vector<var_id> cutset;
  std::uint64_t cases_evaluated = 0;
};

inline cutset_result cutset_conditioning_belief(
    const network& net, const instantiation& evidence, var_id x,
    std::optional<std::vector<var_id>> cutset_override = std::nullopt) {
  std::vector<var_id> cutset = cutset_override
                                   ? detail::checked_cutset(net, *cutset_override)
                                   : find_loop_cutset(net);
  conditioned_structure structure = condition_structure(net, cutset);
  if (!frame_is_singly_connected(structure))
    throw structural_error(
        "conditioning on the given cutset leaves the network multiply "
        "connected");

  cutset_result out;
  out.cutset = cutset;
  out.belief = support_vector::zeros(x, net.var(x).cardinality);
  detail::for_each_combination(
      net, cutset, [&](const std::vector<int>& combo) {
        ++out.cases_evaluated;
        instantiation values;
        for (std::size_t i = 0; i < cutset.size(); ++i)
          values.set(cutset[i], combo[i]);
        if (!values.consistent_with(evidence)) return;
        conditioned_network cn = condition(net, structure, values);
        polytree_state state(cn.frame,
                             values.merged_with(evidence));
        out.belief += state.belief(x);
      });
  return out;
}

}  // namespace dyncond
