#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dyncond/types.hpp"

namespace dyncond {

namespace detail {

/// Iterates all value combinations of the given variables in canonical
/// order: ascending position, last variable fastest. Calls fn(values).
template <typename Fn>
void for_each_combination(const network& net, const std::vector<var_id>& vars,
                          Fn&& fn) {
  std::vector<int> values(vars.size(), 0);
  if (vars.empty()) {
    fn(values);
    return;
  }
  for (;;) {
    fn(values);
    std::size_t i = vars.size();
    for (;;) {
      if (i == 0) return;
      --i;
      if (++values[i] < net.var(vars[i]).cardinality) break;
      values[i] = 0;
    }
  }
}

}  // namespace detail

/// Exact inference on a singly connected network by message passing.
///
/// Supports are unnormalized: pi(x) carries the evidence mass above x,
/// lambda(x) the mass below x including x's own observation, and their
/// product is BEL(x) = Pr(x and evidence-in-x's-component). Evidence
/// enters only as indicator lambda factors; CPTs are never rewritten.
/// All vectors are memoized, so each is computed at most once per state.
class polytree_state {
public:
  polytree_state(const network& net, instantiation evidence)
      : m_net(net),
        m_evidence(std::move(evidence)),
        m_singly(is_singly_connected(net)),
        m_pi(static_cast<std::size_t>(net.size())),
        m_lambda(static_cast<std::size_t>(net.size())) {
    for (const auto& [v, x] : m_evidence.items()) {
      if (v < 0 || v >= net.size() || x < 0 || x >= net.var(v).cardinality)
        throw model_error("evidence assigns an unknown variable or value");
    }
  }

  const network& net() const { return m_net; }
  const instantiation& evidence() const { return m_evidence; }

  /// Causal support: pi(x) = Pr(x | evidence above x), unnormalized.
  /// Excludes x's own observation.
  const support_vector& pi(var_id x) {
    require_polytree();
    auto& slot = m_pi[static_cast<std::size_t>(x)];
    if (slot) return *slot;

    const cpt& c = m_net.cpt_of(x);
    support_vector out = support_vector::zeros(x, c.width);
    if (c.parents.empty()) {
      for (int v = 0; v < c.width; ++v) out[v] = c.entry(0, v);
    } else {
      std::vector<const support_vector*> msgs;
      msgs.reserve(c.parents.size());
      for (var_id u : c.parents) msgs.push_back(&pi_message(u, x));
      detail::for_each_combination(
          m_net, c.parents, [&](const std::vector<int>& values) {
            double weight = 1.0;
            std::size_t row = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
              weight *= (*msgs[i])[values[i]];
              row = row * static_cast<std::size_t>(
                              m_net.var(c.parents[i]).cardinality) +
                    static_cast<std::size_t>(values[i]);
            }
            if (weight == 0.0) return;
            for (int v = 0; v < c.width; ++v)
              out[v] += weight * c.entry(row, v);
          });
    }
    slot = std::move(out);
    return *slot;
  }

  /// Diagnostic support: lambda(x) = Pr(evidence below x | x), including
  /// the indicator for x's own observation.
  const support_vector& lambda(var_id x) {
    require_polytree();
    auto& slot = m_lambda[static_cast<std::size_t>(x)];
    if (slot) return *slot;

    support_vector out = indicator(x);
    for (var_id y : m_net.children(x)) out *= lambda_message(y, x);
    slot = std::move(out);
    return *slot;
  }

  /// Message x passes to its child y: pi(x) combined with the lambda
  /// messages of x's other children and x's own observation.
  const support_vector& pi_message(var_id x, var_id y) {
    require_polytree();
    auto it = m_pi_messages.find({x, y});
    if (it != m_pi_messages.end()) return it->second;

    support_vector out = pi(x);
    out *= indicator(x);
    for (var_id k : m_net.children(x))
      if (k != y) out *= lambda_message(k, x);
    return m_pi_messages.emplace(std::make_pair(x, y), std::move(out))
        .first->second;
  }

  /// Message x passes to its parent u: lambda(x) folded through x's CPT
  /// and the pi messages of x's other parents.
  const support_vector& lambda_message(var_id x, var_id u) {
    require_polytree();
    auto it = m_lambda_messages.find({x, u});
    if (it != m_lambda_messages.end()) return it->second;

    const cpt& c = m_net.cpt_of(x);
    const support_vector& lam = lambda(x);
    std::vector<const support_vector*> msgs(c.parents.size(), nullptr);
    std::size_t u_pos = c.parents.size();
    for (std::size_t i = 0; i < c.parents.size(); ++i) {
      if (c.parents[i] == u)
        u_pos = i;
      else
        msgs[i] = &pi_message(c.parents[i], x);
    }
    if (u_pos == c.parents.size())
      throw model_error("lambda_message requires an arc from the parent");

    support_vector out =
        support_vector::zeros(u, m_net.var(u).cardinality);
    detail::for_each_combination(
        m_net, c.parents, [&](const std::vector<int>& values) {
          double weight = 1.0;
          std::size_t row = 0;
          for (std::size_t i = 0; i < values.size(); ++i) {
            if (i != u_pos) weight *= (*msgs[i])[values[i]];
            row = row * static_cast<std::size_t>(
                            m_net.var(c.parents[i]).cardinality) +
                  static_cast<std::size_t>(values[i]);
          }
          if (weight == 0.0) return;
          double kernel = 0.0;
          for (int v = 0; v < c.width; ++v)
            kernel += c.entry(row, v) * lam[v];
          out[values[u_pos]] += weight * kernel;
        });
    return m_lambda_messages.emplace(std::make_pair(x, u), std::move(out))
        .first->second;
  }

  /// BEL(x) = Pr(x and all evidence): pi times lambda, scaled by the
  /// evidence mass of every other connected component.
  support_vector belief(var_id x) {
    support_vector out = pi(x);
    out *= lambda(x);
    out.scale(foreign_component_mass(x));
    return out;
  }

private:
  void require_polytree() const {
    if (!m_singly)
      throw structural_error(
          "the polytree recursion requires a singly connected network");
  }

  support_vector indicator(var_id x) const {
    const int card = m_net.var(x).cardinality;
    if (auto v = m_evidence.get(x))
      return support_vector::unit(x, card, *v);
    return support_vector::ones(x, card);
  }

  /// Product of the evidence masses of all components other than x's.
  /// Components without evidence contribute exactly 1 and are skipped.
  double foreign_component_mass(var_id x) {
    if (m_labels.empty()) m_labels = component_labels(m_net);
    std::vector<char> has_evidence;
    for (const auto& [v, value] : m_evidence.items()) {
      int label = m_labels[static_cast<std::size_t>(v)];
      if (static_cast<int>(has_evidence.size()) <= label)
        has_evidence.resize(static_cast<std::size_t>(label) + 1, 0);
      has_evidence[static_cast<std::size_t>(label)] = 1;
    }
    double mass = 1.0;
    const int own = m_labels[static_cast<std::size_t>(x)];
    for (int label = 0; label < static_cast<int>(has_evidence.size());
         ++label) {
      if (label == own || !has_evidence[static_cast<std::size_t>(label)])
        continue;
      auto it = m_component_mass.find(label);
      if (it == m_component_mass.end()) {
        var_id rep = -1;
        for (var_id v = 0; v < m_net.size() && rep < 0; ++v)
          if (m_labels[static_cast<std::size_t>(v)] == label) rep = v;
        support_vector b = pi(rep);
        b *= lambda(rep);
        it = m_component_mass.emplace(label, b.sum()).first;
      }
      mass *= it->second;
    }
    return mass;
  }

  const network& m_net;
  instantiation m_evidence;
  bool m_singly;
  std::vector<std::optional<support_vector>> m_pi, m_lambda;
  std::map<std::pair<var_id, var_id>, support_vector> m_pi_messages,
      m_lambda_messages;
  std::vector<int> m_labels;
  std::map<int, double> m_component_mass;
};

/// One-call belief on a singly connected network.
inline support_vector polytree_belief(const network& net,
                                      const instantiation& evidence,
                                      var_id x) {
  polytree_state state(net, evidence);
  return state.belief(x);
}

}  // namespace dyncond
