#pragma once

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "dyncond/format.hpp"
#include "dyncond/types.hpp"

namespace fixtures {

/// Two-variable chain: A -> B.
/// Pr(a1) = 0.3, Pr(b1 | a1) = 0.9, Pr(b1 | a0) = 0.2.
inline const char* net_a_text =
    "var A 2 a1 a0\n"
    "var B 2 b1 b0\n"
    "cpt A |\n"
    "0.3 0.7\n"
    "cpt B | A\n"
    "0.9 0.1\n"
    "0.2 0.8\n";

/// Diamond: A -> B, A -> C, {B, C} -> D. The smallest multiply
/// connected network used across the suites.
inline const char* net_d_text =
    "var A 2 a1 a0\n"
    "var B 2 b1 b0\n"
    "var C 2 c1 c0\n"
    "var D 2 d1 d0\n"
    "cpt A |\n"
    "0.5 0.5\n"
    "cpt B | A\n"
    "0.8 0.2\n"
    "0.3 0.7\n"
    "cpt C | A\n"
    "0.6 0.4\n"
    "0.4 0.6\n"
    "cpt D | B C\n"
    "0.99 0.01\n"
    "0.9 0.1\n"
    "0.9 0.1\n"
    "0.05 0.95\n";

/// Ternary root with a binary child, for mixed-cardinality coverage.
inline const char* net_t_text =
    "var S 3 lo mid hi\n"
    "var T 2 t1 t0\n"
    "cpt S |\n"
    "0.5 0.3 0.2\n"
    "cpt T | S\n"
    "0.9 0.1\n"
    "0.5 0.5\n"
    "0.2 0.8\n";

inline dyncond::network net_a() { return dyncond::parse_network(net_a_text); }
inline dyncond::network net_d() { return dyncond::parse_network(net_d_text); }
inline dyncond::network net_t() { return dyncond::parse_network(net_t_text); }

/// Builds evidence from (variable name, value name) pairs.
inline dyncond::instantiation ev(
    const dyncond::network& net,
    std::initializer_list<std::pair<const char*, const char*>> pairs) {
  dyncond::instantiation out;
  for (const auto& [var_name, value_name] : pairs) {
    dyncond::var_id v = net.find_var(var_name);
    if (v < 0) throw dyncond::model_error(std::string("no variable ") + var_name);
    const auto& names = net.var(v).value_names;
    int x = -1;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == value_name) x = static_cast<int>(i);
    if (x < 0) throw dyncond::model_error(std::string("no value ") + value_name);
    out.set(v, x);
  }
  return out;
}

/// Largest absolute difference between a support vector and expectations.
inline double max_diff(const dyncond::support_vector& got,
                       std::initializer_list<double> want) {
  if (got.values.size() != want.size()) return 1.0;
  double worst = 0.0;
  std::size_t i = 0;
  for (double w : want) {
    double d = got.values[i++] - w;
    if (d < 0) d = -d;
    if (d > worst) worst = d;
  }
  return worst;
}

inline double max_diff(const dyncond::support_vector& got,
                       const dyncond::support_vector& want) {
  if (got.values.size() != want.values.size()) return 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < want.values.size(); ++i) {
    double d = got.values[i] - want.values[i];
    if (d < 0) d = -d;
    if (d > worst) worst = d;
  }
  return worst;
}

}  // namespace fixtures
