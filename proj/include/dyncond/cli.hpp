#pragma once

/// Batch front end: load or generate a network, run any engine, and
/// emit beliefs, bounds, structure dumps, and benchmark rows as stable
/// line-oriented text. Everything routes through run(), which maps
/// failures to exit codes: 1 usage, 2 input, 3 structure, 4 abstraction.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyncond/analysis.hpp"
#include "dyncond/bcond.hpp"
#include "dyncond/conditioning.hpp"
#include "dyncond/dynamic.hpp"
#include "dyncond/format.hpp"
#include "dyncond/netgen.hpp"
#include "dyncond/oracle.hpp"
#include "dyncond/polytree.hpp"
#include "dyncond/types.hpp"

namespace dyncond::cli {

/// Bad command line, as opposed to bad data; exits 1 with the usage text.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const char* usage_text() {
  return
      "usage: dyncond <subcommand> [flags]\n"
      "\n"
      "network source (query, bound, analyze):\n"
      "  --net FILE                read a network file\n"
      "  --family F --size N       generate one instead (F: diamond-ladder,\n"
      "                            adder, random) [--seed S] [--noise P]\n"
      "                            [--card-min K] [--card-max K]\n"
      "                            [--max-parents M] [--extra-edges E] [--zeros]\n"
      "\n"
      "subcommands:\n"
      "  query    [--algo oracle|polytree|cutset|dynamic] [--target A,B]\n"
      "           [--evidence A=a1,B=b0] [--cutset A,B]\n"
      "           beliefs BEL (joint with evidence) and POST (normalized)\n"
      "  bound    --target X (--epsilon E | --sweep E1,E2,...)\n"
      "           [--evidence ...]  per-value [lower,upper] bound rows\n"
      "  analyze  [--cutset A,B]   cutset, absorbed arcs, per-variable\n"
      "           summation and relevance sets\n"
      "  gen      --family F --size N [generator flags] [--out FILE]\n"
      "           write the generated network\n"
      "  bench    --family F --sizes 2..12|2,4,8 [--algos cutset,dynamic]\n"
      "           [--seed S] [--noise P]  per-size operation-count rows\n"
      "\n"
      "exit codes: 0 ok, 1 usage, 2 input, 3 structure, 4 abstraction\n";
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string fmt_exact(double v) { return fmt(v, "%.17g"); }

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline int parse_int(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != text.size())
    throw usage_error("--" + flag + " expects an integer, got '" + text + "'");
  return value;
}

inline double parse_double(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != text.size())
    throw usage_error("--" + flag + " expects a number, got '" + text + "'");
  return value;
}

inline std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != text.size())
    throw usage_error("--seed expects an unsigned integer, got '" + text +
                      "'");
  return value;
}

/// `--sizes 2..12` inclusive range or `--sizes 2,4,8` list.
inline std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    int lo = parse_int(text.substr(0, dots), "sizes");
    int hi = parse_int(text.substr(dots + 2), "sizes");
    if (lo > hi) throw usage_error("--sizes range runs backwards");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
  } else {
    for (const std::string& tok : split(text, ','))
      out.push_back(parse_int(tok, "sizes"));
  }
  if (out.empty()) throw usage_error("--sizes lists nothing");
  return out;
}

/// Flags as `--name value` or `--name=value`; booleans stand alone.
/// Repeated --evidence and --target accumulate, anything else last-wins.
class flag_parser {
 public:
  flag_parser(const std::vector<std::string>& args, std::size_t start,
              const std::set<std::string>& allowed,
              const std::set<std::string>& booleans) {
    for (std::size_t i = start; i < args.size(); ++i) {
      std::string token = args[i];
      if (token.rfind("--", 0) != 0 || token.size() <= 2)
        throw usage_error("unexpected argument '" + token + "'");
      token.erase(0, 2);
      std::string value;
      bool has_value = false;
      std::size_t eq = token.find('=');
      if (eq != std::string::npos) {
        value = token.substr(eq + 1);
        token.resize(eq);
        has_value = true;
      }
      if (allowed.count(token) == 0)
        throw usage_error("unknown flag --" + token);
      if (booleans.count(token) != 0) {
        if (has_value) throw usage_error("--" + token + " takes no value");
        m_values[token];
        continue;
      }
      if (!has_value) {
        if (i + 1 >= args.size())
          throw usage_error("--" + token + " needs a value");
        value = args[++i];
      }
      auto [it, inserted] = m_values.emplace(token, value);
      if (!inserted) {
        if (token == "evidence" || token == "target")
          it->second += "," + value;
        else
          it->second = value;
      }
    }
  }

  bool has(const std::string& name) const {
    return m_values.count(name) != 0;
  }
  const std::string& get(const std::string& name) const {
    return m_values.at(name);
  }
  std::string get_or(const std::string& name, std::string fallback) const {
    auto it = m_values.find(name);
    return it == m_values.end() ? std::move(fallback) : it->second;
  }

 private:
  std::map<std::string, std::string> m_values;
};

inline net_family family_from(const std::string& name) {
  if (name == "diamond-ladder") return net_family::diamond_ladder;
  if (name == "adder") return net_family::adder;
  if (name == "random") return net_family::random_loopy;
  throw usage_error("unknown family '" + name +
                    "' (diamond-ladder, adder, random)");
}

inline generator_spec spec_from_flags(const flag_parser& flags) {
  generator_spec spec;
  spec.family = family_from(flags.get("family"));
  spec.size = parse_int(flags.get("size"), "size");
  spec.seed = parse_seed(flags.get_or("seed", "1"));
  if (flags.has("noise"))
    spec.noise = parse_double(flags.get("noise"), "noise");
  if (flags.has("card-min"))
    spec.card_min = parse_int(flags.get("card-min"), "card-min");
  if (flags.has("card-max"))
    spec.card_max = parse_int(flags.get("card-max"), "card-max");
  if (flags.has("max-parents"))
    spec.max_parents = parse_int(flags.get("max-parents"), "max-parents");
  if (flags.has("extra-edges"))
    spec.extra_edges = parse_int(flags.get("extra-edges"), "extra-edges");
  spec.inject_zeros = flags.has("zeros");
  return spec;
}

inline network load_network(const flag_parser& flags) {
  if (flags.has("net")) {
    std::ifstream in(flags.get("net"));
    if (!in)
      throw model_error("cannot open network file '" + flags.get("net") +
                        "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_network(buffer.str());
  }
  if (flags.has("family")) {
    if (!flags.has("size")) throw usage_error("--family needs --size");
    return generate(spec_from_flags(flags));
  }
  throw usage_error("need a network: --net FILE or --family F --size N");
}

inline int value_index(const network& net, var_id v,
                       const std::string& value) {
  const std::vector<std::string>& names = net.var(v).value_names;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == value) return static_cast<int>(i);
  throw model_error("variable '" + net.var(v).name + "' has no value '" +
                    value + "'");
}

inline instantiation parse_evidence(const network& net,
                                    const flag_parser& flags) {
  instantiation out;
  if (!flags.has("evidence")) return out;
  for (const std::string& item : split(flags.get("evidence"), ',')) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw usage_error("evidence items look like NAME=VALUE, got '" + item +
                        "'");
    std::string name = item.substr(0, eq);
    var_id v = net.find_var(name);
    if (v < 0)
      throw model_error("evidence names unknown variable '" + name + "'");
    out.set(v, value_index(net, v, item.substr(eq + 1)));
  }
  return out;
}

inline std::vector<var_id> parse_targets(const network& net,
                                         const flag_parser& flags) {
  std::vector<var_id> out;
  if (!flags.has("target")) {
    for (var_id v = 0; v < net.size(); ++v) out.push_back(v);
    return out;
  }
  for (const std::string& name : split(flags.get("target"), ',')) {
    var_id v = net.find_var(name);
    if (v < 0) throw model_error("unknown query variable '" + name + "'");
    out.push_back(v);
  }
  if (out.empty()) throw usage_error("--target lists no variables");
  return out;
}

inline std::optional<std::vector<var_id>> parse_cutset(
    const network& net, const flag_parser& flags) {
  if (!flags.has("cutset")) return std::nullopt;
  std::vector<var_id> out;
  for (const std::string& name : split(flags.get("cutset"), ',')) {
    var_id v = net.find_var(name);
    if (v < 0) throw model_error("unknown cutset variable '" + name + "'");
    out.push_back(v);
  }
  return out;
}

inline std::string name_csv(const network& net,
                            const std::vector<var_id>& vars) {
  std::string out;
  for (var_id v : vars) {
    if (!out.empty()) out += ',';
    out += net.var(v).name;
  }
  return out;
}

inline void print_belief(std::ostream& out, const network& net, var_id x,
                         const support_vector& bel) {
  const variable& v = net.var(x);
  out << "BEL " << v.name;
  for (int i = 0; i < bel.card(); ++i)
    out << ' ' << v.value_names[static_cast<std::size_t>(i)] << '='
        << fmt(bel.values[static_cast<std::size_t>(i)]);
  out << '\n';
  support_vector post = bel.normalized();
  out << "POST " << v.name;
  for (int i = 0; i < post.card(); ++i)
    out << ' ' << v.value_names[static_cast<std::size_t>(i)] << '='
        << fmt(post.values[static_cast<std::size_t>(i)]);
  out << '\n';
}

inline int cmd_query(const flag_parser& flags, std::ostream& out) {
  network net = load_network(flags);
  instantiation evidence = parse_evidence(net, flags);
  std::vector<var_id> targets = parse_targets(net, flags);
  std::string algo = flags.get_or("algo", "dynamic");

  double pr_e = 0.0;
  if (algo == "oracle") {
    std::vector<support_vector> all = oracle_all_marginals(net, evidence);
    for (var_id x : targets)
      print_belief(out, net, x, all[static_cast<std::size_t>(x)]);
    pr_e = all[static_cast<std::size_t>(targets.front())].sum();
    std::uint64_t states = 1;
    for (const variable& v : net.variables())
      states *= static_cast<std::uint64_t>(v.cardinality);
    out << "pr_e=" << fmt(pr_e) << '\n';
    out << "algo=oracle\n";
    out << "states=" << states << '\n';
  } else if (algo == "polytree") {
    polytree_state state(net, evidence);
    std::vector<support_vector> beliefs;
    for (var_id x : targets) beliefs.push_back(state.belief(x));
    for (std::size_t i = 0; i < targets.size(); ++i)
      print_belief(out, net, targets[i], beliefs[i]);
    pr_e = beliefs.front().sum();
    out << "pr_e=" << fmt(pr_e) << '\n';
    out << "algo=polytree\n";
  } else if (algo == "cutset") {
    std::optional<std::vector<var_id>> override = parse_cutset(net, flags);
    std::vector<cutset_result> results;
    for (var_id x : targets)
      results.push_back(cutset_conditioning_belief(net, evidence, x, override));
    for (std::size_t i = 0; i < targets.size(); ++i)
      print_belief(out, net, targets[i], results[i].belief);
    pr_e = results.front().belief.sum();
    out << "pr_e=" << fmt(pr_e) << '\n';
    out << "algo=cutset\n";
    out << "cutset=" << name_csv(net, results.front().cutset) << '\n';
    out << "cases=" << results.front().cases_evaluated << '\n';
  } else if (algo == "dynamic") {
    std::optional<std::vector<var_id>> override = parse_cutset(net, flags);
    dynamic_engine engine(net, evidence,
                          override ? *override : find_loop_cutset(net));
    std::vector<support_vector> beliefs;
    for (var_id x : targets) beliefs.push_back(engine.belief(x));
    for (std::size_t i = 0; i < targets.size(); ++i)
      print_belief(out, net, targets[i], beliefs[i]);
    pr_e = beliefs.front().sum();
    const engine_stats& st = engine.stats();
    out << "pr_e=" << fmt(pr_e) << '\n';
    out << "algo=dynamic\n";
    out << "cutset=" << name_csv(net, engine.structure().cutset) << '\n';
    out << "messages=" << st.messages_computed << '\n';
    out << "supports=" << st.total_supports_computed() << '\n';
    out << "extensions=" << st.extension_cases << '\n';
    out << "cache_lookups=" << st.cache_lookups << '\n';
    out << "cache_hits=" << st.cache_hits << '\n';
  } else {
    throw usage_error("unknown algorithm '" + algo +
                      "' (oracle, polytree, cutset, dynamic)");
  }
  return 0;
}

inline int cmd_bound(const flag_parser& flags, std::ostream& out,
                     std::ostream& err) {
  network net = load_network(flags);
  instantiation evidence = parse_evidence(net, flags);
  if (!flags.has("target")) throw usage_error("bound needs --target");
  std::vector<var_id> targets = parse_targets(net, flags);
  if (targets.size() != 1)
    throw usage_error("bound takes exactly one --target variable");
  var_id x = targets.front();

  if (flags.has("epsilon") == flags.has("sweep"))
    throw usage_error("bound needs exactly one of --epsilon or --sweep");
  std::vector<double> epsilons;
  if (flags.has("epsilon")) {
    epsilons.push_back(parse_double(flags.get("epsilon"), "epsilon"));
  } else {
    for (const std::string& tok : split(flags.get("sweep"), ','))
      epsilons.push_back(parse_double(tok, "sweep"));
    if (epsilons.empty()) throw usage_error("--sweep lists nothing");
  }

  std::vector<sweep_row> rows = epsilon_sweep(net, x, evidence, epsilons);
  bool warned = false;
  const variable& vx = net.var(x);
  for (const sweep_row& row : rows) {
    if (row.bounds.non_root_evidence && !warned) {
      err << "warning: evidence on non-root variables; bounds remain valid "
             "but may be loose\n";
      warned = true;
    }
    out << "eps=" << fmt(row.epsilon)
        << " assumptions=" << row.assumption_count;
    for (int v = 0; v < row.bounds.lower.card(); ++v)
      out << ' ' << vx.value_names[static_cast<std::size_t>(v)] << "=["
          << fmt_exact(row.bounds.lower.values[static_cast<std::size_t>(v)])
          << ','
          << fmt_exact(row.bounds.upper.values[static_cast<std::size_t>(v)])
          << ']';
    out << " lost_mass=" << fmt_exact(row.bounds.lost_mass)
        << " messages=" << row.messages_computed << '\n';
  }
  return 0;
}

inline int cmd_analyze(const flag_parser& flags, std::ostream& out) {
  network net = load_network(flags);
  std::optional<std::vector<var_id>> override = parse_cutset(net, flags);
  conditioned_structure structure =
      condition_structure(net, override ? *override : find_loop_cutset(net));
  absorption_sets absorbed =
      compute_absorption_sets(net, structure.cutset, structure);
  relevant_cutsets rel = compute_relevant_cutsets(net, structure, absorbed);
  local_cutsets locals = derive_local_cutsets(structure, absorbed, rel);

  out << "vars=" << net.size() << '\n';
  out << "singly_connected=" << (is_singly_connected(net) ? "true" : "false")
      << '\n';
  out << "cutset=" << name_csv(net, structure.cutset) << '\n';
  for (const auto& [from, to] : structure.absorbed_arcs)
    out << "absorbed=" << net.var(from).name << "->" << net.var(to).name
        << '\n';
  for (var_id v = 0; v < net.size(); ++v) {
    const auto i = static_cast<std::size_t>(v);
    out << "var=" << net.var(v).name
        << " belief=" << name_csv(net, locals.belief[i])
        << " causal=" << name_csv(net, locals.causal[i])
        << " diagnostic=" << name_csv(net, locals.diagnostic[i])
        << " relevant_up=" << name_csv(net, rel.r_plus[i])
        << " relevant_down=" << name_csv(net, rel.r_minus[i]) << '\n';
  }
  out << "edges_visited=" << rel.edges_visited << '\n';
  return 0;
}

inline int cmd_gen(const flag_parser& flags, std::ostream& out) {
  if (!flags.has("family") || !flags.has("size"))
    throw usage_error("gen needs --family and --size");
  network net = generate(spec_from_flags(flags));
  std::string text = serialize_network(net);
  if (flags.has("out")) {
    std::ofstream file(flags.get("out"));
    if (!file)
      throw model_error("cannot write file '" + flags.get("out") + "'");
    file << text;
  } else {
    out << text;
  }
  return 0;
}

inline int cmd_bench(const flag_parser& flags, std::ostream& out) {
  if (!flags.has("family") || !flags.has("sizes"))
    throw usage_error("bench needs --family and --sizes");
  net_family family = family_from(flags.get("family"));
  std::vector<int> sizes = parse_sizes(flags.get("sizes"));
  std::vector<std::string> algos =
      flags.has("algos") ? split(flags.get("algos"), ',')
                         : std::vector<std::string>{"cutset", "dynamic"};
  for (const std::string& algo : algos)
    if (algo != "oracle" && algo != "polytree" && algo != "cutset" &&
        algo != "dynamic")
      throw usage_error("unknown algorithm '" + algo + "' in --algos");

  generator_spec base;
  base.family = family;
  base.seed = parse_seed(flags.get_or("seed", "1"));
  if (flags.has("noise"))
    base.noise = parse_double(flags.get("noise"), "noise");

  // The workload is one belief query of the generated network's last
  // variable; operation counts, not wall time, carry the comparison.
  for (int size : sizes) {
    generator_spec spec = base;
    spec.size = size;
    network net = generate(spec);
    var_id x = net.size() - 1;
    for (const std::string& algo : algos) {
      std::uint64_t messages = 0;
      std::uint64_t cases = 0;
      auto start = std::chrono::steady_clock::now();
      if (algo == "oracle") {
        oracle_all_marginals(net, {});
        cases = 1;
        for (const variable& v : net.variables())
          cases *= static_cast<std::uint64_t>(v.cardinality);
      } else if (algo == "polytree") {
        polytree_state state(net, {});
        state.belief(x);
      } else if (algo == "cutset") {
        cutset_result r = cutset_conditioning_belief(net, {}, x);
        cases = r.cases_evaluated;
      } else {
        dynamic_engine engine(net, {}, find_loop_cutset(net));
        engine.belief(x);
        messages = engine.stats().messages_computed;
        cases = engine.stats().extension_cases;
      }
      double wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      out << "algo=" << algo << " family=" << flags.get("family")
          << " size=" << size << " vars=" << net.size()
          << " messages=" << messages << " cases=" << cases
          << " wall_ms=" << fmt(wall_ms, "%.3f") << '\n';
    }
  }
  return 0;
}

}  // namespace detail

/// Dispatch a full command line (without the program name). Writes the
/// report to `out`, diagnostics to `err`, and returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  using detail::flag_parser;
  static const std::set<std::string> source_flags = {
      "net",         "family",      "size",  "seed",        "noise",
      "card-min",    "card-max",    "zeros", "max-parents", "extra-edges"};
  static const std::set<std::string> booleans = {"zeros"};

  if (args.empty()) {
    err << usage_text();
    return 1;
  }
  const std::string& sub = args.front();
  try {
    if (sub == "query") {
      std::set<std::string> allowed = source_flags;
      allowed.insert({"algo", "target", "evidence", "cutset"});
      return detail::cmd_query(flag_parser(args, 1, allowed, booleans), out);
    }
    if (sub == "bound") {
      std::set<std::string> allowed = source_flags;
      allowed.insert({"target", "evidence", "epsilon", "sweep"});
      return detail::cmd_bound(flag_parser(args, 1, allowed, booleans), out,
                               err);
    }
    if (sub == "analyze") {
      std::set<std::string> allowed = source_flags;
      allowed.insert({"cutset"});
      return detail::cmd_analyze(flag_parser(args, 1, allowed, booleans),
                                 out);
    }
    if (sub == "gen") {
      std::set<std::string> allowed = source_flags;
      allowed.insert({"out"});
      allowed.erase("net");
      return detail::cmd_gen(flag_parser(args, 1, allowed, booleans), out);
    }
    if (sub == "bench") {
      std::set<std::string> allowed = {"family", "sizes", "algos", "seed",
                                       "noise"};
      return detail::cmd_bench(flag_parser(args, 1, allowed, booleans), out);
    }
    throw usage_error("unknown subcommand '" + sub + "'");
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n\n" << usage_text();
    return 1;
  } catch (const abstraction_error& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const structural_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dyncond::cli
