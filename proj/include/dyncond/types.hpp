#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dyncond {

/// Index of a variable inside a network. Ids are dense, 0..size()-1,
/// assigned in declaration order.
using var_id = int;

/// Base class for every exception thrown by this library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed .bnet text. Carries the 1-based line number when known.
class parse_error : public error {
public:
  explicit parse_error(const std::string& msg, int line = 0)
      : error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        m_line(line) {}
  int line() const { return m_line; }

private:
  int m_line;
};

/// Inconsistent network definition or invalid argument values.
class model_error : public error {
public:
  using error::error;
};

/// An algorithm was applied to a network with the wrong shape,
/// e.g. the polytree recursion on a multiply connected network.
class structural_error : public error {
public:
  using error::error;
};

/// The joint state space exceeds the exact-enumeration guard.
class enumeration_error : public error {
public:
  using error::error;
};

/// An epsilon-abstraction is inconsistent: some variable ends up with
/// no possible value under the abstracted model.
class abstraction_error : public error {
public:
  using error::error;
};

/// A discrete variable: a name, a cardinality >= 2 and one label per value.
struct variable {
  var_id id = -1;
  std::string name;
  int cardinality = 0;
  std::vector<std::string> value_names;

  bool operator==(const variable&) const = default;
};

/// Conditional probability table of one variable given its parents.
///
/// The table is row major with one row per parent instantiation and one
/// column per child value. Rows are ordered with the last parent varying
/// fastest, matching the .bnet text layout.
struct cpt {
  var_id child = -1;
  std::vector<var_id> parents;
  int width = 0;  ///< child cardinality, the row length
  std::vector<double> table;

  std::size_t row_count() const {
    return width > 0 ? table.size() / static_cast<std::size_t>(width) : 0;
  }
  double entry(std::size_t row, int value) const {
    return table[row * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(value)];
  }

  bool operator==(const cpt&) const = default;
};

/// A partial assignment of values to variables, kept sorted by id.
/// Used for evidence, cutset instantiations and conditioning contexts.
class instantiation {
public:
  instantiation() = default;
  instantiation(std::initializer_list<std::pair<var_id, int>> items) {
    for (const auto& [v, x] : items) set(v, x);
  }

  /// Assigns value x to variable v, replacing any previous assignment.
  void set(var_id v, int x) {
    auto it = lower_bound(v);
    if (it != m_items.end() && it->first == v)
      it->second = x;
    else
      m_items.insert(it, {v, x});
  }

  void erase(var_id v) {
    auto it = lower_bound(v);
    if (it != m_items.end() && it->first == v) m_items.erase(it);
  }

  bool contains(var_id v) const {
    auto it = lower_bound(v);
    return it != m_items.end() && it->first == v;
  }

  std::optional<int> get(var_id v) const {
    auto it = lower_bound(v);
    if (it != m_items.end() && it->first == v) return it->second;
    return std::nullopt;
  }

  /// Value of v, which must be assigned.
  int at(var_id v) const {
    auto it = lower_bound(v);
    if (it == m_items.end() || it->first != v)
      throw model_error("variable " + std::to_string(v) +
                        " is not assigned in this instantiation");
    return it->second;
  }

  std::size_t size() const { return m_items.size(); }
  bool empty() const { return m_items.empty(); }

  const std::vector<std::pair<var_id, int>>& items() const { return m_items; }

  /// Restriction to the given set of variables (ids need not be sorted).
  instantiation restricted_to(const std::vector<var_id>& vars) const {
    instantiation out;
    for (var_id v : vars) {
      if (auto x = get(v)) out.set(v, *x);
    }
    return out;
  }

  /// True when the two assignments agree on every shared variable.
  bool consistent_with(const instantiation& other) const {
    for (const auto& [v, x] : other.m_items) {
      if (auto y = get(v); y && *y != x) return false;
    }
    return true;
  }

  /// Union of the two assignments; shared variables must agree.
  instantiation merged_with(const instantiation& other) const {
    instantiation out = *this;
    for (const auto& [v, x] : other.m_items) {
      if (auto y = get(v); y && *y != x)
        throw model_error("inconsistent merge of instantiations at variable " +
                          std::to_string(v));
      out.set(v, x);
    }
    return out;
  }

  bool operator==(const instantiation&) const = default;
  auto operator<=>(const instantiation&) const = default;

private:
  std::vector<std::pair<var_id, int>>::const_iterator lower_bound(
      var_id v) const {
    return std::lower_bound(
        m_items.begin(), m_items.end(), v,
        [](const std::pair<var_id, int>& a, var_id b) { return a.first < b; });
  }
  std::vector<std::pair<var_id, int>>::iterator lower_bound(var_id v) {
    return std::lower_bound(
        m_items.begin(), m_items.end(), v,
        [](const std::pair<var_id, int>& a, var_id b) { return a.first < b; });
  }

  std::vector<std::pair<var_id, int>> m_items;
};

inline std::size_t hash_value(const instantiation& inst) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ull;
  };
  for (const auto& [v, x] : inst.items()) {
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)));
  }
  return static_cast<std::size_t>(h);
}

/// A vector of nonnegative supports indexed by the values of one variable.
/// Depending on context it holds priors, likelihoods, messages or beliefs.
struct support_vector {
  var_id var = -1;
  std::vector<double> values;

  static support_vector zeros(var_id v, int card) {
    return {v, std::vector<double>(static_cast<std::size_t>(card), 0.0)};
  }
  static support_vector ones(var_id v, int card) {
    return {v, std::vector<double>(static_cast<std::size_t>(card), 1.0)};
  }
  static support_vector unit(var_id v, int card, int at) {
    support_vector s = zeros(v, card);
    s.values[static_cast<std::size_t>(at)] = 1.0;
    return s;
  }

  int card() const { return static_cast<int>(values.size()); }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }

  support_vector& operator*=(const support_vector& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] *= o.values[i];
    return *this;
  }
  support_vector& operator+=(const support_vector& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  support_vector& scale(double s) {
    for (double& v : values) v *= s;
    return *this;
  }

  /// Proportional rescaling to sum 1. A zero vector stays zero.
  support_vector normalized() const {
    support_vector out = *this;
    double s = sum();
    if (s > 0.0) out.scale(1.0 / s);
    return out;
  }

  bool operator==(const support_vector&) const = default;
};

inline support_vector operator*(support_vector a, const support_vector& b) {
  a *= b;
  return a;
}

/// Tolerance for CPT row sums at validation time.
inline constexpr double row_sum_tolerance = 1e-9;

/// A discrete Bayesian network: variables plus one CPT per variable,
/// forming a directed acyclic graph. Immutable after construction.
class network {
public:
  network() = default;

  network(std::vector<variable> vars, std::vector<cpt> cpts)
      : m_vars(std::move(vars)), m_cpts(std::move(cpts)) {
    validate();
  }

  int size() const { return static_cast<int>(m_vars.size()); }

  const variable& var(var_id v) const {
    return m_vars[static_cast<std::size_t>(v)];
  }
  const cpt& cpt_of(var_id v) const {
    return m_cpts[static_cast<std::size_t>(v)];
  }
  const std::vector<var_id>& parents(var_id v) const {
    return m_cpts[static_cast<std::size_t>(v)].parents;
  }
  const std::vector<var_id>& children(var_id v) const {
    return m_children[static_cast<std::size_t>(v)];
  }
  const std::vector<variable>& variables() const { return m_vars; }
  const std::vector<cpt>& cpts() const { return m_cpts; }

  /// Id of the variable with the given name, or -1 when absent.
  var_id find_var(std::string_view name) const {
    for (const variable& v : m_vars)
      if (v.name == name) return v.id;
    return -1;
  }

  /// Index of the row of cpt_of(v) selected by the given full assignment
  /// of v's parents.
  std::size_t row_of(var_id v, const instantiation& values) const {
    const cpt& c = m_cpts[static_cast<std::size_t>(v)];
    std::size_t row = 0;
    for (var_id p : c.parents) {
      row = row * static_cast<std::size_t>(var(p).cardinality) +
            static_cast<std::size_t>(values.at(p));
    }
    return row;
  }

  bool operator==(const network& o) const {
    return m_vars == o.m_vars && m_cpts == o.m_cpts;
  }

private:
  void validate();

  std::vector<variable> m_vars;
  std::vector<cpt> m_cpts;
  std::vector<std::vector<var_id>> m_children;
};

/// Variables in an order where every parent precedes its children.
/// Ties are broken by ascending id, so the order is canonical.
inline std::vector<var_id> topological_order(const network& net) {
  const int n = net.size();
  std::vector<int> pending(static_cast<std::size_t>(n));
  std::priority_queue<var_id, std::vector<var_id>, std::greater<>> ready;
  for (var_id v = 0; v < n; ++v) {
    pending[static_cast<std::size_t>(v)] =
        static_cast<int>(net.parents(v).size());
    if (pending[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  std::vector<var_id> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    var_id v = ready.top();
    ready.pop();
    order.push_back(v);
    for (var_id c : net.children(v))
      if (--pending[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }
  if (static_cast<int>(order.size()) != n)
    throw model_error("network contains a directed cycle");
  return order;
}

namespace detail {

/// Small union-find over variable ids.
class disjoint_sets {
public:
  explicit disjoint_sets(int n) : m_parent(static_cast<std::size_t>(n)) {
    for (int i = 0; i < n; ++i) m_parent[static_cast<std::size_t>(i)] = i;
  }
  int find(int a) {
    while (m_parent[static_cast<std::size_t>(a)] != a) {
      m_parent[static_cast<std::size_t>(a)] =
          m_parent[static_cast<std::size_t>(m_parent[static_cast<std::size_t>(a)])];
      a = m_parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  /// Returns false when a and b were already connected.
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    m_parent[static_cast<std::size_t>(b)] = a;
    return true;
  }

private:
  std::vector<int> m_parent;
};

}  // namespace detail

/// True when the undirected skeleton of the network is a forest,
/// i.e. the network is singly connected.
inline bool is_singly_connected(const network& net) {
  detail::disjoint_sets sets(net.size());
  for (var_id v = 0; v < net.size(); ++v)
    for (var_id p : net.parents(v))
      if (!sets.unite(p, v)) return false;
  return true;
}

/// Connected-component label per variable. Labels are dense and numbered
/// by ascending smallest member id.
inline std::vector<int> component_labels(const network& net) {
  detail::disjoint_sets sets(net.size());
  for (var_id v = 0; v < net.size(); ++v)
    for (var_id p : net.parents(v)) sets.unite(p, v);
  std::vector<int> label(static_cast<std::size_t>(net.size()), -1);
  int next = 0;
  for (var_id v = 0; v < net.size(); ++v) {
    int root = sets.find(v);
    if (label[static_cast<std::size_t>(root)] < 0)
      label[static_cast<std::size_t>(root)] = next++;
    label[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(root)];
  }
  return label;
}

/// Probability of one full assignment: the product over all variables of
/// the matching CPT entry.
inline double joint_probability(const network& net,
                                const instantiation& full) {
  if (static_cast<int>(full.size()) != net.size())
    throw model_error("joint_probability requires a full assignment");
  double p = 1.0;
  for (var_id v = 0; v < net.size(); ++v) {
    const cpt& c = net.cpt_of(v);
    p *= c.entry(net.row_of(v, full), full.at(v));
  }
  return p;
}

inline void network::validate() {
  const int n = static_cast<int>(m_vars.size());
  if (m_cpts.size() != m_vars.size())
    throw model_error("expected exactly one CPT per variable");
  for (var_id v = 0; v < n; ++v) {
    const variable& var = m_vars[static_cast<std::size_t>(v)];
    if (var.id != v)
      throw model_error("variable ids must be dense and in declaration order");
    if (var.name.empty())
      throw model_error("variable names must be non-empty");
    if (var.cardinality < 2)
      throw model_error("variable " + var.name +
                        " must have cardinality at least 2");
    if (static_cast<int>(var.value_names.size()) != var.cardinality)
      throw model_error("variable " + var.name +
                        " needs one name per value");
    for (std::size_t i = 0; i < var.value_names.size(); ++i)
      for (std::size_t j = i + 1; j < var.value_names.size(); ++j)
        if (var.value_names[i] == var.value_names[j])
          throw model_error("variable " + var.name +
                            " has duplicate value name " + var.value_names[i]);
    for (var_id w = v + 1; w < n; ++w)
      if (m_vars[static_cast<std::size_t>(w)].name == var.name)
        throw model_error("duplicate variable name " + var.name);
  }

  m_children.assign(static_cast<std::size_t>(n), {});
  for (var_id v = 0; v < n; ++v) {
    const cpt& c = m_cpts[static_cast<std::size_t>(v)];
    const variable& var = m_vars[static_cast<std::size_t>(v)];
    if (c.child != v)
      throw model_error("CPT order must match variable order");
    if (c.width != var.cardinality)
      throw model_error("CPT of " + var.name +
                        " has wrong row length");
    std::size_t rows = 1;
    for (var_id p : c.parents) {
      if (p < 0 || p >= n)
        throw model_error("CPT of " + var.name +
                          " references an unknown parent");
      if (p == v)
        throw model_error("variable " + var.name + " cannot be its own parent");
      rows *= static_cast<std::size_t>(
          m_vars[static_cast<std::size_t>(p)].cardinality);
    }
    for (std::size_t i = 0; i < c.parents.size(); ++i)
      for (std::size_t j = i + 1; j < c.parents.size(); ++j)
        if (c.parents[i] == c.parents[j])
          throw model_error("CPT of " + var.name + " repeats a parent");
    if (c.table.size() != rows * static_cast<std::size_t>(c.width))
      throw model_error("CPT of " + var.name + " has " +
                        std::to_string(c.table.size()) +
                        " entries, expected " +
                        std::to_string(rows * static_cast<std::size_t>(c.width)));
    for (double e : c.table)
      if (!(e >= 0.0) || e > 1.0)
        throw model_error("CPT of " + var.name +
                          " has an entry outside [0, 1]");
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int x = 0; x < c.width; ++x) s += c.entry(r, x);
      if (s < 1.0 - row_sum_tolerance || s > 1.0 + row_sum_tolerance)
        throw model_error("row " + std::to_string(r) + " of CPT " + var.name +
                          " sums to " + std::to_string(s));
    }
    for (var_id p : c.parents)
      m_children[static_cast<std::size_t>(p)].push_back(v);
  }
  topological_order(*this);
}

/// For each variable, the set of values still considered possible.
/// A freshly built set considers everything possible; ruling out
/// (variable, value) pairs records assumptions of impossibility.
class assumption_set {
public:
  assumption_set() = default;
  explicit assumption_set(const network& net) {
    m_possible.reserve(static_cast<std::size_t>(net.size()));
    for (const variable& v : net.variables())
      m_possible.emplace_back(static_cast<std::size_t>(v.cardinality), 1);
  }

  bool possible(var_id v, int x) const {
    return m_possible[static_cast<std::size_t>(v)][static_cast<std::size_t>(x)] !=
           0;
  }
  void rule_out(var_id v, int x) {
    m_possible[static_cast<std::size_t>(v)][static_cast<std::size_t>(x)] = 0;
  }

  int possible_count(var_id v) const {
    int n = 0;
    for (char c : m_possible[static_cast<std::size_t>(v)]) n += c != 0;
    return n;
  }

  /// Number of (variable, value) pairs ruled out.
  int ruled_out_count() const {
    int n = 0;
    for (const auto& row : m_possible)
      for (char c : row) n += c == 0;
    return n;
  }

  bool nothing_ruled_out() const { return ruled_out_count() == 0; }

  /// True when every pair this set rules out is also ruled out by other.
  bool subset_of(const assumption_set& other) const {
    for (std::size_t v = 0; v < m_possible.size(); ++v)
      for (std::size_t x = 0; x < m_possible[v].size(); ++x)
        if (m_possible[v][x] == 0 && other.m_possible[v][x] != 0) return false;
    return true;
  }

  bool operator==(const assumption_set&) const = default;

private:
  std::vector<std::vector<char>> m_possible;
};

/// Sorted set union of two ascending id lists.
inline std::vector<var_id> set_union(const std::vector<var_id>& a,
                                     const std::vector<var_id>& b) {
  std::vector<var_id> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

/// Sorted set intersection of two ascending id lists.
inline std::vector<var_id> set_intersection(const std::vector<var_id>& a,
                                            const std::vector<var_id>& b) {
  std::vector<var_id> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

inline bool set_contains(const std::vector<var_id>& sorted, var_id v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

}  // namespace dyncond
