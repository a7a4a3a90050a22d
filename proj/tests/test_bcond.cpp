#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dyncond/bcond.hpp"
#include "dyncond/netgen.hpp"
#include "dyncond/oracle.hpp"
#include "dyncond/types.hpp"
#include "fixtures.hpp"

using namespace dyncond;
using fixtures::ev;
using fixtures::max_diff;

namespace {

/// Diamond fixture with a skewed prior: Pr(a1) = 0.05, everything else
/// as in the standard diamond.
const char* skewed_diamond_text =
    "var A 2 a1 a0\n"
    "var B 2 b1 b0\n"
    "var C 2 c1 c0\n"
    "var D 2 d1 d0\n"
    "cpt A |\n"
    "0.05 0.95\n"
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

/// Chain A -> B -> C in which ruling out a1 cascades: the surviving a0
/// row makes b1 impossible, whose surviving b0 row makes c1 impossible.
const char* cascade_chain_text =
    "var A 2 a1 a0\n"
    "var B 2 b1 b0\n"
    "var C 2 c1 c0\n"
    "cpt A |\n"
    "0.05 0.95\n"
    "cpt B | A\n"
    "0.9 0.1\n"
    "0.08 0.92\n"
    "cpt C | B\n"
    "0.5 0.5\n"
    "0.07 0.93\n";

network skewed_diamond() { return parse_network(skewed_diamond_text); }
network cascade_chain() { return parse_network(cascade_chain_text); }

struct corpus_entry {
  std::string name;
  network net;
};

std::vector<corpus_entry> bound_corpus() {
  std::vector<corpus_entry> out;
  out.push_back({"diamond", fixtures::net_d()});
  out.push_back({"ternary-chain", fixtures::net_t()});
  out.push_back({"skewed-diamond", skewed_diamond()});
  out.push_back({"ladder-2", diamond_ladder(2, 7)});
  out.push_back({"ladder-3", diamond_ladder(3, 11)});
  out.push_back({"adder-2", n_bit_adder(2, 0.05, 3)});
  out.push_back({"adder-3", n_bit_adder(3, 0.1, 5)});
  generator_spec loopy;
  loopy.size = 9;
  loopy.seed = 21;
  out.push_back({"loopy-9", random_network(loopy)});
  generator_spec mixed;
  mixed.size = 8;
  mixed.seed = 22;
  mixed.card_max = 3;
  out.push_back({"mixed-8", random_network(mixed)});
  generator_spec zeros;
  zeros.size = 10;
  zeros.seed = 23;
  zeros.extra_edges = 3;
  zeros.inject_zeros = true;
  out.push_back({"zeros-10", random_network(zeros)});
  generator_spec tree;
  tree.size = 10;
  tree.seed = 31;
  tree.extra_edges = 0;
  out.push_back({"tree-10", random_network(tree)});
  return out;
}

assumption_set random_mask(const network& net, random_source& rng) {
  assumption_set mask(net);
  for (var_id v = 0; v < net.size(); ++v)
    for (int x = 0; x < net.var(v).cardinality; ++x)
      if (rng.uniform() < 0.25) mask.rule_out(v, x);
  return mask;
}

var_id first_root(const network& net) {
  for (var_id v = 0; v < net.size(); ++v)
    if (net.parents(v).empty()) return v;
  return -1;
}

}  // namespace

TEST_CASE("cutoff scan freezes the small entries") {
  network net = fixtures::net_d();

  // Closed comparison: the two rows holding an exact 0.1 participate at
  // a cutoff of 0.1. Rows of D: (b1 c1), (b1 c0), (b0 c1), (b0 c0).
  abstraction tenth = abstract_network(net, 0.1);
  REQUIRE(tenth.epsilon == 0.1);
  REQUIRE(tenth.entries == std::vector<impossible_entry>{
                               {3, 0, 1}, {3, 1, 1}, {3, 2, 1}, {3, 3, 0}});
  REQUIRE(tenth.impossible(3, 1, 1));
  REQUIRE_FALSE(tenth.impossible(3, 1, 0));

  abstraction twentieth = abstract_network(net, 0.05);
  REQUIRE(twentieth.entries ==
          std::vector<impossible_entry>{{3, 0, 1}, {3, 3, 0}});

  // Monotone: everything impossible at 0.05 stays impossible at 0.1.
  for (const impossible_entry& e : twentieth.entries)
    REQUIRE(tenth.impossible(e.child, e.row, e.value));

  REQUIRE(abstract_network(net, 0.0).entries.empty());
  REQUIRE(abstract_network(net, 0.02).entries ==
          std::vector<impossible_entry>{{3, 0, 1}});

  // Ternary fixture: the prior entry sitting exactly at the cutoff goes.
  abstraction ternary = abstract_network(fixtures::net_t(), 0.2);
  REQUIRE(ternary.entries == std::vector<impossible_entry>{
                                 {0, 0, 2}, {1, 0, 1}, {1, 2, 0}});

  // A cutoff of zero keeps exactly the hard zeros of a deterministic net.
  network adder = n_bit_adder(2, 0.0, 1);
  std::size_t hard_zeros = 0;
  for (var_id v = 0; v < adder.size(); ++v) {
    const cpt& table = adder.cpt_of(v);
    for (std::size_t r = 0; r < table.row_count(); ++r)
      for (int x = 0; x < adder.var(v).cardinality; ++x)
        if (table.entry(r, x) == 0.0) ++hard_zeros;
  }
  REQUIRE(abstract_network(adder, 0.0).entries.size() == hard_zeros);
  REQUIRE(hard_zeros > 0);

  REQUIRE_THROWS_AS(abstract_network(net, 1.0), model_error);
  REQUIRE_THROWS_AS(abstract_network(net, 1.5), model_error);
  REQUIRE_THROWS_AS(abstract_network(net, -0.1), model_error);
  REQUIRE_THROWS_AS(abstract_network(net, std::nan("")), model_error);
}

TEST_CASE("possibility propagation rules out unreachable values") {
  network net = fixtures::net_d();

  // Standard diamond at 0.1: every value keeps a supporting row, so
  // nothing is assumed (d1 via the 0.99 row, d0 via the 0.95 row).
  REQUIRE(zero_rank_propagation(abstract_network(net, 0.1), net)
              .nothing_ruled_out());

  // Skewed prior: a1 itself falls below the cutoff; downstream values
  // survive through the a0 rows alone.
  network skewed = skewed_diamond();
  assumption_set a = zero_rank_propagation(abstract_network(skewed, 0.1),
                                           skewed);
  REQUIRE(a.ruled_out_count() == 1);
  REQUIRE_FALSE(a.possible(0, 0));
  REQUIRE(a.possible(0, 1));

  // Root evidence pinning the abstracted-away value is a contradiction.
  REQUIRE_THROWS_WITH(
      zero_rank_propagation(abstract_network(skewed, 0.1), skewed,
                            ev(skewed, {{"A", "a1"}})),
      Catch::Matchers::ContainsSubstring("A"));
  REQUIRE_THROWS_AS(
      zero_rank_propagation(abstract_network(skewed, 0.1), skewed,
                            ev(skewed, {{"A", "a1"}})),
      abstraction_error);

  // Evidence on a non-root is outside what the forward pass can use.
  REQUIRE_THROWS_AS(zero_rank_propagation(abstract_network(net, 0.1), net,
                                          ev(net, {{"B", "b1"}})),
                    model_error);

  // Root evidence on the allowed value restricts the root's other value.
  assumption_set pinned = zero_rank_propagation(
      abstract_network(net, 0.1), net, ev(net, {{"A", "a1"}}));
  REQUIRE_FALSE(pinned.possible(0, 1));
  REQUIRE(pinned.possible(0, 0));

  // Impossibility cascades down a chain one hop per table.
  network chain = cascade_chain();
  assumption_set c = zero_rank_propagation(abstract_network(chain, 0.1),
                                           chain);
  REQUIRE(c.ruled_out_count() == 3);
  REQUIRE_FALSE(c.possible(0, 0));
  REQUIRE_FALSE(c.possible(1, 0));
  REQUIRE_FALSE(c.possible(2, 0));

  // Ternary root: the 0.2 prior entry dies exactly at cutoff 0.2.
  network t = fixtures::net_t();
  assumption_set ta = zero_rank_propagation(abstract_network(t, 0.2), t);
  REQUIRE(ta.ruled_out_count() == 1);
  REQUIRE_FALSE(ta.possible(0, 2));

  // Strictly positive tables at cutoff zero assume nothing.
  REQUIRE(zero_rank_propagation(abstract_network(net, 0.0), net)
              .nothing_ruled_out());
}

TEST_CASE("pruned queries equal the filtered enumeration") {
  network net = fixtures::net_d();

  // Nothing ruled out: identical to the plain engine, entry for entry.
  assumption_set none(net);
  REQUIRE(pruned_belief(net, 3, {}, none).values ==
          dynamic_belief(net, {}, 3).values);

  // Skewed diamond with a1 assumed away: only the a0 worlds remain.
  //   lower(d1) = 0.95 * 0.5538 = 0.52611
  //   lower(d0) = 0.95 * 0.4462 = 0.42389
  network skewed = skewed_diamond();
  assumption_set no_a1(skewed);
  no_a1.rule_out(0, 0);
  support_vector lower = pruned_belief(skewed, 3, {}, no_a1);
  REQUIRE(max_diff(lower, {0.52611, 0.42389}) <= 1e-12);
  REQUIRE(max_diff(lower, pruned_belief(skewed, 3, {}, no_a1,
                                        pruned_backend::enumeration)) <=
          1e-10);

  // Ruling out all values of B but b1 is the same event as observing b1.
  assumption_set clamp_b(net);
  clamp_b.rule_out(1, 1);
  support_vector clamped = pruned_belief(net, 3, {}, clamp_b);
  REQUIRE(max_diff(clamped, {0.522, 0.028}) <= 1e-12);
  REQUIRE(max_diff(clamped, dynamic_belief(net, ev(net, {{"B", "b1"}}), 3)) <=
          1e-12);

  // A ruled-out query value yields a zero entry, not an error.
  assumption_set no_d0(net);
  no_d0.rule_out(3, 1);
  REQUIRE(pruned_belief(net, 3, {}, no_d0)[1] == 0.0);

  // Assumptions combine with evidence like any other restriction.
  instantiation e = ev(net, {{"D", "d1"}});
  assumption_set no_b0(net);
  no_b0.rule_out(1, 1);
  REQUIRE(max_diff(pruned_belief(net, 0, e, no_b0),
                   oracle_marginal(net, e, 0, no_b0)) <= 1e-10);
}

TEST_CASE("bounds on the fixtures") {
  network net = fixtures::net_d();

  // No assumptions at 0.1 on the standard diamond: the interval closes.
  bounded_belief_result exact = bounded_belief(net, 3, {}, 0.1);
  REQUIRE(exact.assumption_count == 0);
  REQUIRE(max_diff(exact.bounds.lower, {0.7145, 0.2855}) <= 1e-12);
  REQUIRE(max_diff(exact.bounds.upper, {0.7145, 0.2855}) <= 1e-12);
  REQUIRE(std::abs(exact.bounds.lost_mass) <= 1e-12);
  REQUIRE_FALSE(exact.bounds.non_root_evidence);

  // Skewed diamond: the lower entries sum to Pr(a0) = 0.95 and the lost
  // 0.05 reopens both upper entries.
  network skewed = skewed_diamond();
  bounded_belief_result r = bounded_belief(skewed, 3, {}, 0.1);
  REQUIRE(r.assumption_count == 1);
  REQUIRE(max_diff(r.bounds.lower, {0.52611, 0.42389}) <= 1e-12);
  REQUIRE(std::abs(r.bounds.lost_mass - 0.05) <= 1e-12);
  REQUIRE(max_diff(r.bounds.upper, {0.57611, 0.47389}) <= 1e-12);
  double filtered = oracle_marginal(skewed, {}, 0, r.assumptions).sum();
  REQUIRE(std::abs(r.bounds.lower.sum() - filtered) <= 1e-9);
  // The exact values sit inside the interval.
  support_vector truth = oracle_marginal(skewed, {}, 3);
  for (int v = 0; v < truth.card(); ++v) {
    REQUIRE(r.bounds.lower[v] <= truth[v] + 1e-12);
    REQUIRE(truth[v] <= r.bounds.upper[v] + 1e-12);
  }

  // Cascading chain: only the a0 b0 c0 world survives the assumptions.
  network chain = cascade_chain();
  bounded_belief_result cr = bounded_belief(chain, 2, {}, 0.1);
  REQUIRE(cr.assumption_count == 3);
  REQUIRE(max_diff(cr.bounds.lower, {0.0, 0.81282}) <= 1e-12);
  REQUIRE(std::abs(cr.bounds.lost_mass - 0.18718) <= 1e-12);
  REQUIRE(max_diff(cr.bounds.upper, {0.18718, 1.0}) <= 1e-12);

  // Ternary polytree at 0.2: hi assumed away, bounds widen by Pr(hi).
  network t = fixtures::net_t();
  bounded_belief_result tr = bounded_belief(t, 1, {}, 0.2);
  REQUIRE(tr.assumption_count == 1);
  REQUIRE(max_diff(tr.bounds.lower, {0.6, 0.2}) <= 1e-12);
  REQUIRE(std::abs(tr.bounds.lost_mass - 0.2) <= 1e-12);
  REQUIRE(max_diff(tr.bounds.upper, {0.8, 0.4}) <= 1e-12);

  // Cutoff zero on strictly positive tables: lower = upper = exact.
  for (const network& pos : {fixtures::net_a(), fixtures::net_d(), t}) {
    for (var_id x = 0; x < pos.size(); ++x) {
      bounded_belief_result z = bounded_belief(pos, x, {}, 0.0);
      REQUIRE(z.assumption_count == 0);
      REQUIRE(max_diff(z.bounds.lower, oracle_marginal(pos, {}, x)) <= 1e-10);
      REQUIRE(max_diff(z.bounds.lower, z.bounds.upper) <= 1e-12);
      REQUIRE(std::abs(z.bounds.lost_mass) <= 1e-12);
    }
  }

  // Cutoff zero stays exact even with hard zeros in the tables: values
  // ruled out by propagation carry no mass in the first place.
  network adder = n_bit_adder(2, 0.0, 1);
  for (var_id x = 0; x < adder.size(); ++x) {
    bounded_belief_result z = bounded_belief(adder, x, {}, 0.0);
    REQUIRE(max_diff(z.bounds.lower, oracle_marginal(adder, {}, x)) <= 1e-10);
    REQUIRE(std::abs(z.bounds.lost_mass) <= 1e-12);
  }

  // Non-root evidence flips the advisory flag; root evidence does not.
  REQUIRE(bounded_belief(net, 0, ev(net, {{"D", "d1"}}), 0.1)
              .bounds.non_root_evidence);
  REQUIRE_FALSE(bounded_belief(net, 3, ev(net, {{"A", "a0"}}), 0.1)
                    .bounds.non_root_evidence);

  // The skewed root contradiction propagates out of the composition.
  REQUIRE_THROWS_AS(bounded_belief(skewed, 3, ev(skewed, {{"A", "a1"}}), 0.1),
                    abstraction_error);
  REQUIRE_THROWS_AS(bounded_belief(net, 3, {}, 1.0), model_error);
}

TEST_CASE("bounds stay valid across the corpus") {
  const std::vector<double> grid = {0.01, 0.05, 0.1, 0.2, 0.4};
  std::size_t checked = 0;
  std::size_t inconsistent = 0;

  for (const corpus_entry& entry : bound_corpus()) {
    INFO("network " << entry.name);
    const network& net = entry.net;
    std::vector<support_vector> truth = oracle_all_marginals(net, {});

    for (double eps : grid) {
      assumption_set assumed(net);
      try {
        assumed = zero_rank_propagation(abstract_network(net, eps), net);
      } catch (const abstraction_error&) {
        ++inconsistent;
        continue;
      }
      std::vector<support_vector> filtered =
          oracle_all_marginals(net, {}, &assumed);

      for (var_id x = 0; x < net.size(); ++x) {
        INFO("cutoff " << eps << " variable " << net.var(x).name);
        bounded_belief_result r = bounded_belief(net, x, {}, eps);
        // The engine's pruned sum is the filtered enumeration.
        REQUIRE(max_diff(r.bounds.lower, filtered[static_cast<std::size_t>(
                                             x)]) <= 1e-10);
        for (int v = 0; v < truth[static_cast<std::size_t>(x)].card(); ++v) {
          double exact = truth[static_cast<std::size_t>(x)][v];
          REQUIRE(r.bounds.lower[v] >= -1e-12);
          REQUIRE(r.bounds.lower[v] <= exact + 1e-9);
          REQUIRE(exact <= r.bounds.upper[v] + 1e-9);
          REQUIRE(r.bounds.upper[v] <= 1.0 + 1e-9);
        }
        REQUIRE(r.bounds.lost_mass >= -1e-9);
        ++checked;
      }
    }

    // Assumption sets grow with the cutoff wherever both sides exist.
    for (std::size_t i = 1; i < grid.size(); ++i) {
      assumption_set small(net);
      assumption_set large(net);
      try {
        small = zero_rank_propagation(abstract_network(net, grid[i - 1]), net);
        large = zero_rank_propagation(abstract_network(net, grid[i]), net);
      } catch (const abstraction_error&) {
        continue;
      }
      REQUIRE(small.subset_of(large));
    }
  }
  REQUIRE(checked > 100);
}

TEST_CASE("bounds stay valid under root and general evidence") {
  std::vector<corpus_entry> nets;
  nets.push_back({"diamond", fixtures::net_d()});
  nets.push_back({"ladder-2", diamond_ladder(2, 7)});
  {
    generator_spec tree;
    tree.size = 10;
    tree.seed = 31;
    tree.extra_edges = 0;
    nets.push_back({"tree-10", random_network(tree)});
  }

  for (const corpus_entry& entry : nets) {
    INFO("network " << entry.name);
    const network& net = entry.net;
    var_id root = first_root(net);
    REQUIRE(root >= 0);
    instantiation e;
    e.set(root, net.var(root).cardinality - 1);

    for (double eps : {0.05, 0.2}) {
      bounded_belief_result r;
      try {
        r = bounded_belief(net, net.size() - 1, e, eps);
      } catch (const abstraction_error&) {
        continue;
      }
      REQUIRE_FALSE(r.bounds.non_root_evidence);
      support_vector truth = oracle_marginal(net, e, net.size() - 1);
      for (int v = 0; v < truth.card(); ++v) {
        REQUIRE(r.bounds.lower[v] <= truth[v] + 1e-9);
        REQUIRE(truth[v] <= r.bounds.upper[v] + 1e-9);
      }
    }
  }

  // General evidence: the interval stays valid, only the flag warns.
  network net = fixtures::net_d();
  instantiation e = ev(net, {{"D", "d0"}});
  bounded_belief_result r = bounded_belief(net, 0, e, 0.1);
  REQUIRE(r.bounds.non_root_evidence);
  support_vector truth = oracle_marginal(net, e, 0);
  for (int v = 0; v < truth.card(); ++v) {
    REQUIRE(r.bounds.lower[v] <= truth[v] + 1e-9);
    REQUIRE(truth[v] <= r.bounds.upper[v] + 1e-9);
  }
}

TEST_CASE("arbitrary assumption sets still bound the truth") {
  std::vector<network> nets;
  nets.push_back(fixtures::net_d());
  {
    generator_spec mixed;
    mixed.size = 8;
    mixed.seed = 22;
    mixed.card_max = 3;
    nets.push_back(random_network(mixed));
  }
  {
    generator_spec zeros;
    zeros.size = 10;
    zeros.seed = 23;
    zeros.extra_edges = 3;
    zeros.inject_zeros = true;
    nets.push_back(random_network(zeros));
  }

  random_source rng(97);
  for (const network& net : nets) {
    std::vector<support_vector> truth = oracle_all_marginals(net, {});
    for (int round = 0; round < 4; ++round) {
      assumption_set mask = random_mask(net, rng);
      for (var_id x : {var_id{0}, net.size() - 1}) {
        support_vector lower = pruned_belief(net, x, {}, mask);
        REQUIRE(max_diff(lower, pruned_belief(net, x, {}, mask,
                                              pruned_backend::enumeration)) <=
                1e-10);
        double lost = 1.0 - lower.sum();
        for (int v = 0; v < lower.card(); ++v) {
          double exact = truth[static_cast<std::size_t>(x)][v];
          REQUIRE(lower[v] <= exact + 1e-9);
          REQUIRE(exact <= lower[v] + lost + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("sweeps run largest cutoff first and shrink monotonically") {
  generator_spec spec;
  spec.size = 20;
  spec.seed = 40;
  spec.card_max = 3;
  spec.extra_edges = 3;
  network net = random_network(spec);
  REQUIRE_FALSE(is_singly_connected(net));

  const std::vector<double> cutoffs = {0.2, 0.1, 0.02};
  std::vector<sweep_row> rows = epsilon_sweep(net, net.size() - 1, {}, cutoffs);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows.front().assumption_count > 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].epsilon == cutoffs[i]);
    REQUIRE(rows[i].bounds.lost_mass >= -1e-9);
    for (int v = 0; v < rows[i].bounds.lower.card(); ++v) {
      REQUIRE(rows[i].bounds.lower[v] >= -1e-12);
      REQUIRE(rows[i].bounds.lower[v] <= rows[i].bounds.upper[v] + 1e-12);
      REQUIRE(rows[i].bounds.upper[v] <= 1.0 + 1e-9);
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    // Smaller cutoff: fewer assumptions, tighter interval, no saved work.
    REQUIRE(rows[i].assumption_count <= rows[i - 1].assumption_count);
    REQUIRE(rows[i].bounds.lost_mass <= rows[i - 1].bounds.lost_mass + 1e-12);
    REQUIRE(rows[i].messages_computed >= rows[i - 1].messages_computed);
  }

  // A single-cutoff sweep is one bounded_belief call.
  std::vector<sweep_row> one = epsilon_sweep(net, net.size() - 1, {}, {0.1});
  bounded_belief_result direct = bounded_belief(net, net.size() - 1, {}, 0.1);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].bounds.lower.values == direct.bounds.lower.values);
  REQUIRE(one[0].bounds.upper.values == direct.bounds.upper.values);
  REQUIRE(one[0].assumption_count == direct.assumption_count);
  REQUIRE(one[0].messages_computed == direct.messages_computed);

  REQUIRE_THROWS_AS(epsilon_sweep(net, 0, {}, {0.02, 0.1}), model_error);
}
