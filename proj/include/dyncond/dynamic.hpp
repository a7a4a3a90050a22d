#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dyncond/analysis.hpp"
#include "dyncond/conditioning.hpp"
#include "dyncond/polytree.hpp"
#include "dyncond/types.hpp"

namespace dyncond {

/// Counters for what one engine actually evaluated. Cache hits are
/// requests answered from the store; computed counts are the distinct
/// evaluations that had to run.
struct engine_stats {
  std::uint64_t messages_computed = 0;
  std::uint64_t pi_supports_computed = 0;
  std::uint64_t lambda_supports_computed = 0;
  std::uint64_t cache_lookups = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t extension_cases = 0;
  /// Distinct message evaluations per directed frame arc.
  std::map<std::pair<var_id, var_id>, std::uint64_t> per_arc_messages;

  std::uint64_t max_arc_messages() const {
    std::uint64_t worst = 0;
    for (const auto& [arc, count] : per_arc_messages)
      worst = std::max(worst, count);
    return worst;
  }
  std::uint64_t total_supports_computed() const {
    return pi_supports_computed + lambda_supports_computed;
  }
};

/// Belief propagation over a conditioned network that instantiates only
/// the cutset variables each intermediate quantity actually depends on.
///
/// Every support and message carries a context: a partial instantiation
/// of the cutset. A quantity is cached under its context restricted to
/// its relevant set, so requests that differ only on irrelevant cutset
/// variables share one evaluation. Where a local summation set is not
/// yet assigned by the context, the evaluation sums it out on the spot:
///
///   belief(x)          sums the belief set of X, then combines the two
///                      supports;
///   pi support         sums the causal set, then folds parent messages
///                      through X's reduced table;
///   lambda support     sums the diagnostic set against X's observation
///                      indicator and child messages;
///   message to child   sums the belief set around the pi support and
///                      the diagnostic set around the other children;
///   message to parent  pins the receiving parent entry by entry, then
///                      sums the belief and causal sets around the
///                      lambda support and the other parents' messages.
///
/// An optional assumption set prunes every summation: ruled-out values
/// of extension variables, parent configurations, and support entries
/// are skipped outright, which is what turns this exact engine into the
/// approximate one the abstraction layer drives.
class dynamic_engine {
 public:
  dynamic_engine(const network& net, instantiation evidence,
                 std::vector<var_id> cutset, bool use_cache = true,
                 const assumption_set* assumptions = nullptr)
      : m_net(net),
        m_evidence(std::move(evidence)),
        m_use_cache(use_cache),
        m_assumptions(assumptions) {
    for (const auto& [v, x] : m_evidence.items()) {
      if (v < 0 || v >= net.size())
        throw model_error("evidence names an unknown variable");
      if (x < 0 || x >= net.var(v).cardinality)
        throw model_error("evidence value out of range for " +
                          net.var(v).name);
    }
    m_structure = condition_structure(net, cutset);
    m_absorbed = compute_absorption_sets(net, m_structure.cutset, m_structure);
    m_rel = compute_relevant_cutsets(net, m_structure, m_absorbed);
    m_locals = derive_local_cutsets(m_structure, m_absorbed, m_rel);
    m_components = component_labels(net);
  }

  const network& net() const { return m_net; }
  const instantiation& evidence() const { return m_evidence; }
  const conditioned_structure& structure() const { return m_structure; }
  const relevant_cutsets& relevance() const { return m_rel; }
  const local_cutsets& locals() const { return m_locals; }
  const engine_stats& stats() const { return m_stats; }

  /// BEL(x) = Pr(x and evidence), one entry per value of x: the two
  /// supports combined across the belief summation set, scaled by the
  /// mass of evidence in other components.
  support_vector belief(var_id x) {
    if (x < 0 || x >= m_net.size())
      throw model_error("belief query names an unknown variable");
    support_vector out = local_belief(x);
    int home = m_components[static_cast<std::size_t>(x)];
    for (int rep = 0; rep < m_net.size(); ++rep) {
      if (m_components[static_cast<std::size_t>(rep)] != rep || rep == home)
        continue;
      if (!component_constrained(rep)) continue;
      out.scale(component_mass(rep));
    }
    return out;
  }

  /// Causal support pi(x | ctx), excluding x's own observation.
  support_vector pi_support(var_id x, const instantiation& ctx) {
    const auto xi = static_cast<std::size_t>(x);
    instantiation key_ctx = ctx.restricted_to(m_rel.r_plus[xi]);
    cache_key key{kind_pi_support, x, -1, key_ctx};
    if (const support_vector* hit = cache_find(key)) return *hit;

    const cpt& table = m_net.cpt_of(x);
    const auto& frame = m_structure.frame_parents[xi];
    support_vector out = support_vector::zeros(x, table.width);
    for_each_extension(m_locals.causal[xi], key_ctx, [&](const instantiation&
                                                             ext) {
      std::vector<support_vector> messages;
      messages.reserve(frame.size());
      for (var_id u : frame) messages.push_back(pi_message(u, x, ext));
      detail::for_each_combination(
          m_net, frame, [&](const std::vector<int>& values) {
            double weight = 1.0;
            for (std::size_t i = 0; i < values.size(); ++i)
              weight *= messages[i][values[i]];
            if (weight == 0.0) return;
            std::size_t row = reduced_row(table, x, frame, values, -1, 0, ext);
            for (int v = 0; v < table.width; ++v)
              out[v] += weight * table.entry(row, v);
          });
    });
    ++m_stats.pi_supports_computed;
    return cache_store(std::move(key), std::move(out));
  }

  /// Diagnostic support lambda(x | ctx), including x's own observation
  /// and its consistency with the context.
  support_vector lambda_support(var_id x, const instantiation& ctx) {
    const auto xi = static_cast<std::size_t>(x);
    instantiation key_ctx = ctx.restricted_to(m_rel.r_minus[xi]);
    cache_key key{kind_lambda_support, x, -1, key_ctx};
    if (const support_vector* hit = cache_find(key)) return *hit;

    support_vector out =
        support_vector::zeros(x, m_net.var(x).cardinality);
    for_each_extension(
        m_locals.diagnostic[xi], key_ctx, [&](const instantiation& ext) {
          support_vector term = context_indicator(x, ext);
          for (var_id y : m_structure.frame_children[xi])
            term *= lambda_message(y, x, ext);
          out += term;
        });
    ++m_stats.lambda_supports_computed;
    return cache_store(std::move(key), std::move(out));
  }

  /// Message x sends to its frame child y: the pi support joined with
  /// the diagnostic side of every other child.
  support_vector pi_message(var_id x, var_id y, const instantiation& ctx) {
    const auto xi = static_cast<std::size_t>(x);
    const auto& kids = m_structure.frame_children[xi];
    if (std::find(kids.begin(), kids.end(), y) == kids.end())
      throw model_error("no frame arc from " + m_net.var(x).name + " to " +
                        m_net.var(y).name);
    instantiation key_ctx = ctx.restricted_to(m_rel.edge_sets.at({x, y}));
    cache_key key{kind_pi_message, x, y, key_ctx};
    if (const support_vector* hit = cache_find(key)) return *hit;

    support_vector out =
        support_vector::zeros(x, m_net.var(x).cardinality);
    for_each_extension(
        m_locals.belief[xi], key_ctx, [&](const instantiation& mid) {
          support_vector causal = pi_support(x, mid);
          for_each_extension(
              m_locals.diagnostic[xi], mid, [&](const instantiation& ext) {
                support_vector term = context_indicator(x, ext);
                for (var_id k : kids)
                  if (k != y) term *= lambda_message(k, x, ext);
                for (int v = 0; v < out.card(); ++v)
                  out[v] += causal[v] * term[v];
              });
        });
    ++m_stats.messages_computed;
    ++m_stats.per_arc_messages[{x, y}];
    return cache_store(std::move(key), std::move(out));
  }

  /// Message x sends to its frame parent u, one entry per value of u.
  /// The receiving value is pinned into the context entry by entry, so
  /// the result never depends on what the context says about u.
  support_vector lambda_message(var_id x, var_id u, const instantiation& ctx) {
    const auto xi = static_cast<std::size_t>(x);
    const auto& frame = m_structure.frame_parents[xi];
    if (std::find(frame.begin(), frame.end(), u) == frame.end())
      throw model_error("no frame arc from " + m_net.var(u).name + " to " +
                        m_net.var(x).name);
    instantiation key_ctx = ctx.restricted_to(m_rel.edge_sets.at({x, u}));
    cache_key key{kind_lambda_message, x, u, key_ctx};
    if (const support_vector* hit = cache_find(key)) return *hit;

    const cpt& table = m_net.cpt_of(x);
    std::vector<var_id> others;
    others.reserve(frame.size() - 1);
    std::size_t u_pos = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (frame[i] == u)
        u_pos = i;
      else
        others.push_back(frame[i]);
    }

    support_vector out =
        support_vector::zeros(u, m_net.var(u).cardinality);
    for (int uv = 0; uv < out.card(); ++uv) {
      if (m_assumptions && !m_assumptions->possible(u, uv)) continue;
      instantiation pinned = key_ctx;
      pinned.set(u, uv);
      for_each_extension(
          m_locals.belief[xi], pinned, [&](const instantiation& mid) {
            support_vector diagnostic = lambda_support(x, mid);
            for_each_extension(
                m_locals.causal[xi], mid, [&](const instantiation& ext) {
                  std::vector<support_vector> messages;
                  messages.reserve(others.size());
                  for (var_id w : others)
                    messages.push_back(pi_message(w, x, ext));
                  detail::for_each_combination(
                      m_net, others, [&](const std::vector<int>& values) {
                        double weight = 1.0;
                        for (std::size_t i = 0; i < values.size(); ++i)
                          weight *= messages[i][values[i]];
                        if (weight == 0.0) return;
                        std::size_t row = reduced_row(
                            table, x, others, values, u, uv, ext);
                        double fold = 0.0;
                        for (int v = 0; v < table.width; ++v)
                          fold += table.entry(row, v) * diagnostic[v];
                        out[uv] += weight * fold;
                      });
                });
          });
    }
    ++m_stats.messages_computed;
    ++m_stats.per_arc_messages[{x, u}];
    return cache_store(std::move(key), std::move(out));
  }

 private:
  enum kind : int {
    kind_pi_support,
    kind_lambda_support,
    kind_pi_message,
    kind_lambda_message
  };

  struct cache_key {
    int kind;
    var_id a;
    var_id b;
    instantiation ctx;
    auto operator<=>(const cache_key&) const = default;
  };

  /// BEL within x's own component, before foreign evidence mass.
  support_vector local_belief(var_id x) {
    const auto xi = static_cast<std::size_t>(x);
    support_vector out =
        support_vector::zeros(x, m_net.var(x).cardinality);
    for_each_extension(
        m_locals.belief[xi], instantiation{}, [&](const instantiation& ctx) {
          support_vector causal = pi_support(x, ctx);
          support_vector diagnostic = lambda_support(x, ctx);
          for (int v = 0; v < out.card(); ++v)
            out[v] += causal[v] * diagnostic[v];
        });
    return out;
  }

  /// True when evidence or an assumption constrains the component whose
  /// smallest member is rep; unconstrained components have mass one.
  bool component_constrained(int rep) {
    for (var_id v = 0; v < m_net.size(); ++v) {
      if (m_components[static_cast<std::size_t>(v)] != rep) continue;
      if (m_evidence.contains(v)) return true;
      if (m_assumptions &&
          m_assumptions->possible_count(v) < m_net.var(v).cardinality)
        return true;
    }
    return false;
  }

  double component_mass(int rep) {
    auto it = m_component_mass.find(rep);
    if (it != m_component_mass.end()) return it->second;
    double mass = local_belief(rep).sum();
    m_component_mass.emplace(rep, mass);
    return mass;
  }

  /// Values of v compatible with the evidence and the assumptions.
  std::vector<int> allowed_values(var_id v) const {
    std::vector<int> out;
    for (int x = 0; x < m_net.var(v).cardinality; ++x) {
      if (auto e = m_evidence.get(v); e && *e != x) continue;
      if (m_assumptions && !m_assumptions->possible(v, x)) continue;
      out.push_back(x);
    }
    return out;
  }

  /// Runs fn on base extended to every allowed instantiation of the
  /// still-unassigned variables of vars.
  template <typename Fn>
  void for_each_extension(const id_set& vars, const instantiation& base,
                          Fn&& fn) {
    std::vector<var_id> todo;
    for (var_id v : vars)
      if (!base.contains(v)) todo.push_back(v);
    std::vector<std::vector<int>> choices;
    choices.reserve(todo.size());
    for (var_id v : todo) {
      choices.push_back(allowed_values(v));
      if (choices.back().empty()) return;
    }

    std::vector<std::size_t> at(todo.size(), 0);
    for (;;) {
      instantiation ctx = base;
      for (std::size_t i = 0; i < todo.size(); ++i)
        ctx.set(todo[i], choices[i][at[i]]);
      ++m_stats.extension_cases;
      fn(ctx);
      std::size_t i = todo.size();
      while (i > 0) {
        --i;
        if (++at[i] < choices[i].size()) break;
        at[i] = 0;
        if (i == 0) return;
      }
      if (todo.empty()) return;
    }
  }

  /// Observation indicator for x under the given context: one where the
  /// value agrees with the evidence, the context and the assumptions,
  /// zero elsewhere.
  support_vector context_indicator(var_id x, const instantiation& ctx) const {
    support_vector out =
        support_vector::ones(x, m_net.var(x).cardinality);
    for (int v = 0; v < out.card(); ++v) {
      if (auto e = m_evidence.get(x); e && *e != v) out[v] = 0.0;
      if (auto c = ctx.get(x); c && *c != v) out[v] = 0.0;
      if (m_assumptions && !m_assumptions->possible(x, v)) out[v] = 0.0;
    }
    return out;
  }

  /// Row of x's original table addressed by frame-parent values from the
  /// running combination, the pinned parent (if any), and absorbed-parent
  /// values read off the context.
  std::size_t reduced_row(const cpt& table, var_id x,
                          const std::vector<var_id>& frame,
                          const std::vector<int>& values, var_id pinned_var,
                          int pinned_value, const instantiation& ctx) const {
    std::size_t row = 0;
    for (var_id p : table.parents) {
      int value;
      if (p == pinned_var) {
        value = pinned_value;
      } else if (m_structure.is_absorbed(p, x)) {
        value = ctx.at(p);
      } else {
        std::size_t i = 0;
        while (frame[i] != p) ++i;
        value = values[i];
      }
      row = row * static_cast<std::size_t>(m_net.var(p).cardinality) +
            static_cast<std::size_t>(value);
    }
    return row;
  }

  const support_vector* cache_find(const cache_key& key) {
    ++m_stats.cache_lookups;
    if (!m_use_cache) return nullptr;
    auto it = m_cache.find(key);
    if (it == m_cache.end()) return nullptr;
    ++m_stats.cache_hits;
    return &it->second;
  }

  support_vector cache_store(cache_key key, support_vector value) {
    if (!m_use_cache) return value;
    return m_cache.emplace(std::move(key), std::move(value))
        .first->second;
  }

  const network& m_net;
  instantiation m_evidence;
  bool m_use_cache;
  const assumption_set* m_assumptions;
  conditioned_structure m_structure;
  absorption_sets m_absorbed;
  relevant_cutsets m_rel;
  local_cutsets m_locals;
  std::vector<int> m_components;
  std::map<cache_key, support_vector> m_cache;
  std::map<int, double> m_component_mass;
  engine_stats m_stats;
};

/// One-call belief with an automatically chosen loop cutset.
inline support_vector dynamic_belief(const network& net,
                                     const instantiation& evidence,
                                     var_id x) {
  dynamic_engine engine(net, evidence, find_loop_cutset(net));
  return engine.belief(x);
}

}  // namespace dyncond
