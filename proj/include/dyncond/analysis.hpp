#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dyncond/conditioning.hpp"
#include "dyncond/types.hpp"

namespace dyncond {

/// Sorted ascending set of variable ids.
using id_set = std::vector<var_id>;

/// Directly absorbed context per variable. a_plus[X] holds the cutset
/// parents whose arcs into X were absorbed (X's reduced table reads their
/// values); a_minus[X] is {X} when X itself is in the cutset (its
/// observation indicator reads its value) and empty otherwise.
struct absorption_sets {
  std::vector<id_set> a_plus;
  std::vector<id_set> a_minus;
};

inline absorption_sets compute_absorption_sets(
    const network& net, const std::vector<var_id>& cutset,
    const conditioned_structure& structure) {
  absorption_sets out;
  out.a_plus.resize(static_cast<std::size_t>(net.size()));
  out.a_minus.resize(static_cast<std::size_t>(net.size()));
  std::vector<var_id> sorted_cutset = detail::checked_cutset(net, cutset);
  for (var_id v = 0; v < net.size(); ++v) {
    id_set plus = structure.absorbed_parents[static_cast<std::size_t>(v)];
    std::sort(plus.begin(), plus.end());
    out.a_plus[static_cast<std::size_t>(v)] = std::move(plus);
    if (set_contains(sorted_cutset, v))
      out.a_minus[static_cast<std::size_t>(v)] = {v};
  }
  return out;
}

/// The cutset variables each support and message actually depends on.
///
/// Over the singly connected frame, the set for a message sent from S
/// toward R gathers the absorbed context on S's whole side of the edge:
///
///   rel(S -> R) = a_plus[S] + a_minus[S] + union of rel(N -> S)
///                 over frame neighbours N of S other than R.
///
/// Each directed edge is computed once and memoized, so the whole table
/// costs time linear in the number of frame arcs. Per-variable sets
/// follow from the edge sets:
///
///   r_plus[X]  = a_plus[X] + union of rel(U -> X) over frame parents,
///   r_minus[X] = a_minus[X] + union of rel(Y -> X) over frame children.
struct relevant_cutsets {
  std::vector<id_set> r_plus;
  std::vector<id_set> r_minus;
  std::map<std::pair<var_id, var_id>, id_set> edge_sets;  ///< (sender, receiver)
  std::uint64_t edges_visited = 0;

  /// Cutset variables the message from parent u into child x depends on.
  const id_set& causal_message_set(var_id u, var_id x) const {
    return edge_sets.at({u, x});
  }
  /// Cutset variables the message child y sends up to x depends on.
  const id_set& diagnostic_message_set(var_id y, var_id x) const {
    return edge_sets.at({y, x});
  }
};

namespace detail {

struct rel_builder {
  const conditioned_structure& structure;
  const absorption_sets& absorbed;
  relevant_cutsets& out;

  const id_set& edge(var_id sender, var_id receiver) {
    auto it = out.edge_sets.find({sender, receiver});
    if (it != out.edge_sets.end()) return it->second;

    ++out.edges_visited;
    id_set acc = set_union(absorbed.a_plus[static_cast<std::size_t>(sender)],
                           absorbed.a_minus[static_cast<std::size_t>(sender)]);
    for (var_id n :
         structure.frame_parents[static_cast<std::size_t>(sender)])
      if (n != receiver) acc = set_union(acc, edge(n, sender));
    for (var_id n :
         structure.frame_children[static_cast<std::size_t>(sender)])
      if (n != receiver) acc = set_union(acc, edge(n, sender));
    return out.edge_sets.emplace(std::make_pair(sender, receiver),
                                 std::move(acc))
        .first->second;
  }
};

}  // namespace detail

inline relevant_cutsets compute_relevant_cutsets(
    const network& net, const conditioned_structure& structure,
    const absorption_sets& absorbed) {
  if (!frame_is_singly_connected(structure))
    throw structural_error(
        "relevant cutsets are defined over a singly connected frame");
  relevant_cutsets out;
  detail::rel_builder builder{structure, absorbed, out};
  const int n = net.size();
  out.r_plus.resize(static_cast<std::size_t>(n));
  out.r_minus.resize(static_cast<std::size_t>(n));
  for (var_id x = 0; x < n; ++x) {
    id_set plus = absorbed.a_plus[static_cast<std::size_t>(x)];
    for (var_id u : structure.frame_parents[static_cast<std::size_t>(x)])
      plus = set_union(plus, builder.edge(u, x));
    out.r_plus[static_cast<std::size_t>(x)] = std::move(plus);

    id_set minus = absorbed.a_minus[static_cast<std::size_t>(x)];
    for (var_id y : structure.frame_children[static_cast<std::size_t>(x)])
      minus = set_union(minus, builder.edge(y, x));
    out.r_minus[static_cast<std::size_t>(x)] = std::move(minus);
    // Materialize the outgoing sets too so edge_sets is complete.
    for (var_id u : structure.frame_parents[static_cast<std::size_t>(x)])
      builder.edge(x, u);
    for (var_id y : structure.frame_children[static_cast<std::size_t>(x)])
      builder.edge(x, y);
  }
  return out;
}

inline relevant_cutsets compute_relevant_cutsets(
    const network& net, const std::vector<var_id>& cutset) {
  conditioned_structure structure = condition_structure(net, cutset);
  absorption_sets absorbed =
      compute_absorption_sets(net, cutset, structure);
  return compute_relevant_cutsets(net, structure, absorbed);
}

/// The summation sets dynamic conditioning runs over, one triple per
/// variable:
///
///   belief[X]     = r_plus[X] intersected with r_minus[X],
///   causal[X]     = a_plus[X] + pairwise intersections of the causal
///                   message sets of X's frame parents,
///   diagnostic[X] = a_minus[X] + pairwise intersections of the
///                   diagnostic message sets of X's frame children.
struct local_cutsets {
  std::vector<id_set> belief;
  std::vector<id_set> causal;
  std::vector<id_set> diagnostic;
};

inline local_cutsets derive_local_cutsets(
    const conditioned_structure& structure, const absorption_sets& absorbed,
    const relevant_cutsets& rel) {
  const std::size_t n = rel.r_plus.size();
  local_cutsets out;
  out.belief.resize(n);
  out.causal.resize(n);
  out.diagnostic.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    out.belief[x] = set_intersection(rel.r_plus[x], rel.r_minus[x]);

    id_set causal = absorbed.a_plus[x];
    const auto& parents = structure.frame_parents[x];
    for (std::size_t i = 0; i < parents.size(); ++i)
      for (std::size_t j = i + 1; j < parents.size(); ++j)
        causal = set_union(
            causal, set_intersection(
                        rel.causal_message_set(parents[i],
                                               static_cast<var_id>(x)),
                        rel.causal_message_set(parents[j],
                                               static_cast<var_id>(x))));
    out.causal[x] = std::move(causal);

    id_set diagnostic = absorbed.a_minus[x];
    const auto& children = structure.frame_children[x];
    for (std::size_t i = 0; i < children.size(); ++i)
      for (std::size_t j = i + 1; j < children.size(); ++j)
        diagnostic = set_union(
            diagnostic,
            set_intersection(rel.diagnostic_message_set(
                                 children[i], static_cast<var_id>(x)),
                             rel.diagnostic_message_set(
                                 children[j], static_cast<var_id>(x))));
    out.diagnostic[x] = std::move(diagnostic);
  }
  return out;
}

enum class cutset_kind { belief, causal, diagnostic };

/// Graph check that a candidate set plays the role the kind names.
///
/// Conditioning here means the arc-absorption transform: the check
/// conditions the network on the candidate (plus the belief context for
/// the causal and diagnostic kinds) and then inspects undirected paths of
/// the transformed graph.
///
///   belief:     X lies on every path connecting one of its ancestors to
///               one of its descendants;
///   causal:     X lies on every path between variables connected to X
///               through different parents;
///   diagnostic: X lies on every path between variables connected to X
///               through different children.
inline bool verify_local_cutset(const network& net, var_id x,
                                cutset_kind kind, const id_set& candidate,
                                const id_set& belief_context = {}) {
  id_set conditioning = candidate;
  if (kind != cutset_kind::belief)
    conditioning = set_union(conditioning, belief_context);
  conditioned_structure s = condition_structure(net, conditioning);

  const int n = net.size();
  detail::disjoint_sets sets(n);
  for (var_id v = 0; v < n; ++v) {
    if (v == x) continue;
    for (var_id p : s.frame_parents[static_cast<std::size_t>(v)])
      if (p != x) sets.unite(p, v);
  }

  if (kind == cutset_kind::belief) {
    auto reachable = [&](bool down) {
      std::vector<char> seen(static_cast<std::size_t>(n), 0);
      std::vector<var_id> stack{x};
      while (!stack.empty()) {
        var_id v = stack.back();
        stack.pop_back();
        const auto& next =
            down ? s.frame_children[static_cast<std::size_t>(v)]
                 : s.frame_parents[static_cast<std::size_t>(v)];
        for (var_id w : next) {
          if (seen[static_cast<std::size_t>(w)]) continue;
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(w);
        }
      }
      return seen;
    };
    std::vector<char> ancestor = reachable(false);
    std::vector<char> descendant = reachable(true);
    std::vector<char> component_has_ancestor(static_cast<std::size_t>(n), 0);
    for (var_id v = 0; v < n; ++v) {
      if (v == x || !ancestor[static_cast<std::size_t>(v)]) continue;
      component_has_ancestor[static_cast<std::size_t>(sets.find(v))] = 1;
    }
    for (var_id v = 0; v < n; ++v) {
      if (v == x || !descendant[static_cast<std::size_t>(v)]) continue;
      if (component_has_ancestor[static_cast<std::size_t>(sets.find(v))])
        return false;
    }
    return true;
  }

  const auto& peers = kind == cutset_kind::causal
                          ? s.frame_parents[static_cast<std::size_t>(x)]
                          : s.frame_children[static_cast<std::size_t>(x)];
  for (std::size_t i = 0; i < peers.size(); ++i)
    for (std::size_t j = i + 1; j < peers.size(); ++j)
      if (sets.find(peers[i]) == sets.find(peers[j])) return false;
  return true;
}

}  // namespace dyncond
