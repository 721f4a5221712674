#include <gtest/gtest.h>

#include <map>
#include <queue>

#include "proc3d/evaluator.hpp"
#include "support/faults.hpp"
#include "support/generators.hpp"

using namespace proc3d;

namespace {

std::size_t error_count(const std::vector<Diagnostic>& ds) {
  std::size_t n = 0;
  for (const auto& d : ds) n += d.severity == Severity::Error ? 1 : 0;
  return n;
}

/// Kahn's algorithm, always releasing the ready node that came first in the input.
std::vector<std::string> reference_order(const Graph& g) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i].id] = i;
  std::vector<std::vector<std::size_t>> users(g.nodes.size());
  std::vector<std::size_t> pending(g.nodes.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    std::set<std::size_t> deps;
    for (const auto& [port, e] : g.nodes[i].args) {
      std::vector<const Expr*> refs;
      collect_refs(e, refs);
      for (const Expr* r : refs)
        if (auto it = index.find(r->target); it != index.end()) deps.insert(it->second);
    }
    pending[i] = deps.size();
    for (auto d : deps) users[d].push_back(i);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < pending.size(); ++i)
    if (pending[i] == 0) ready.push(i);
  std::vector<std::string> out;
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    out.push_back(g.nodes[i].id);
    for (auto u : users[i])
      if (--pending[u] == 0) ready.push(u);
  }
  return out;
}

}  // namespace

TEST(RoundTrip, PrintThenParseIsIdentity) {
  testgen::Rng rng(2024);
  testgen::GraphGenerator gen(rng);
  for (int i = 0; i < 1000; ++i) {
    const Graph g = gen.generate();
    ASSERT_TRUE(validate(g).empty()) << print_pcg(g);
    const std::string text = print_pcg(g);
    const auto back = parse_pcg(text);
    ASSERT_TRUE(back.ok()) << text << format_diagnostic(back.diagnostics.at(0));
    ASSERT_TRUE(structurally_equal(*back.graph, g)) << text;
    ASSERT_EQ(print_pcg(*back.graph), text);
  }
}

TEST(RoundTrip, ReorderedNodesStayEqualAndPrintingIsIdempotent) {
  testgen::Rng rng(77);
  testgen::GraphGenerator gen(rng);
  for (int i = 0; i < 200; ++i) {
    const Graph g = gen.generate();
    Graph shuffled = g;
    std::shuffle(shuffled.nodes.begin(), shuffled.nodes.end(), rng);
    EXPECT_TRUE(structurally_equal(shuffled, g));
    const std::string text = print_pcg(shuffled);
    const auto back = parse_pcg(text);
    ASSERT_TRUE(back.ok());
    EXPECT_TRUE(structurally_equal(*back.graph, g));
    EXPECT_EQ(print_pcg(*back.graph), text);
  }
}

TEST(Fuzz, MutatedSourcesNeverCrashAndAlwaysError) {
  testgen::Rng rng(555);
  testgen::GraphGenerator gen(rng);
  for (int i = 0; i < 1000; ++i) {
    const std::string clean = print_pcg(gen.generate());
    const std::string dirty = testgen::inject_faults(rng, testgen::scramble(rng, clean, static_cast<int>(testgen::uniform_int(rng, 0, 6))), 1).first;
    const auto r = parse_pcg(dirty);
    ASSERT_FALSE(r.ok()) << dirty;
    ASSERT_GE(error_count(r.diagnostics), 1u) << dirty;
    for (const auto& d : r.diagnostics) EXPECT_FALSE(format_diagnostic(d).empty());
  }
}

TEST(Fuzz, ArbitraryBytesNeverCrash) {
  testgen::Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    std::string s(static_cast<std::size_t>(testgen::uniform_int(rng, 0, 200)), '\0');
    for (auto& c : s) c = static_cast<char>(testgen::uniform_int(rng, 0, 255));
    const auto r = parse_pcg(s);
    EXPECT_EQ(r.ok(), !has_errors(r.diagnostics));
    if (!r.ok()) {
      EXPECT_GE(error_count(r.diagnostics), 1u);
    }
  }
}

TEST(Diagnostics, KFaultsGiveAtLeastKErrorsOnThoseLines) {
  testgen::Rng rng(31337);
  testgen::GraphGenerator gen(rng, {6, 30, true});
  for (int i = 0; i < 500; ++i) {
    const std::string clean = print_pcg(gen.generate());
    const int k = static_cast<int>(testgen::uniform_int(rng, 1, 6));
    const auto [dirty, lines] = testgen::inject_faults(rng, clean, k);
    const auto r = parse_pcg(dirty);
    ASSERT_GE(error_count(r.diagnostics), lines.size()) << dirty;
    std::set<int> reported;
    for (const auto& d : r.diagnostics)
      if (d.severity == Severity::Error) reported.insert(d.line);
    for (int l : lines) EXPECT_TRUE(reported.count(l)) << "line " << l << " silent in:\n" << dirty;
  }
}

TEST(TopoOrder, MatchesStableKahnOnRandomDags) {
  testgen::Rng rng(4);
  testgen::GraphGenerator gen(rng, {4, 40, true});
  for (int i = 0; i < 500; ++i) {
    const Graph g = gen.generate();
    const auto order = topo_order(g);
    ASSERT_EQ(order, reference_order(g));
    std::map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < order.size(); ++j) pos[order[j]] = j;
    for (const auto& n : g.nodes)
      for (const auto& [port, e] : n.args) {
        std::vector<const Expr*> refs;
        collect_refs(e, refs);
        for (const Expr* r : refs)
          if (pos.count(r->target)) ASSERT_LT(pos[r->target], pos[n.id]);
      }
  }
}

TEST(TopoOrder, InjectedBackEdgeIsACycle) {
  testgen::Rng rng(8);
  testgen::GraphGenerator gen(rng, {2, 12, false});
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    Graph g = gen.generate();
    const auto order = topo_order(g);
    // Point the earliest transform-like node with a geometry input at the last node.
    for (auto& n : g.nodes) {
      if (n.id == order.back() || !n.args.count("geometry") || n.args["geometry"].kind != Expr::Kind::Ref) continue;
      if (n.kind == "switch") continue;
      n.args["geometry"] = Expr::ref(order.back());
      const auto reach = reference_order(g);
      if (reach.size() == g.nodes.size()) break;  // the node did not feed the last one
      EXPECT_THROW(topo_order(g), CycleError);
      bool flagged = false;
      for (const auto& d : validate(g)) flagged |= d.code == diag::kCycleDetected;
      EXPECT_TRUE(flagged);
      ++checked;
      break;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Incremental, RandomDeltaSequencesMatchFreshEvaluation) {
  testgen::Rng rng(10000);
  testgen::GraphGenerator gen(rng, {6, 25, true});
  for (int trial = 0; trial < 300; ++trial) {
    const Graph g = gen.generate();
    EvalSession session(g);
    Bindings all;
    const int steps = static_cast<int>(testgen::uniform_int(rng, 1, 8));
    for (int s = 0; s < steps; ++s) {
      const Bindings delta = testgen::random_delta(rng, g);
      for (const auto& [k, v] : delta) all[k] = v;
      session.reevaluate(delta);
      ASSERT_TRUE(testgen::bitwise_equal(*session.mesh(), *evaluate(g, all))) << print_pcg(g);
    }
  }
}

TEST(Incremental, UntouchedSubgraphsAreNotRecomputed) {
  testgen::Rng rng(12);
  testgen::GraphGenerator gen(rng, {6, 25, true});
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = gen.generate();
    if (g.params.empty()) continue;
    EvalSession session(g);
    std::map<std::string, std::size_t> before;
    for (const auto& n : g.nodes) before[n.id] = session.recompute_count(n.id);
    const Bindings delta = testgen::random_delta(rng, g);
    session.reevaluate(delta);
    // A node recomputes only if it transitively reads a changed param.
    std::set<std::string> dirty;
    for (const auto& [k, v] : delta) dirty.insert(k);
    for (const auto& id : topo_order(g)) {
      const Node* n = g.find_node(id);
      bool reads = false;
      for (const auto& [port, e] : n->args) {
        std::vector<const Expr*> refs;
        collect_refs(e, refs);
        for (const Expr* r : refs) reads |= dirty.count(r->target) > 0;
      }
      if (reads) dirty.insert(id);
      // Nodes skipped behind a switch may be computed for the first time when it flips.
      if (!reads && before[id] > 0) EXPECT_EQ(session.recompute_count(id), before[id]) << id;
    }
  }
}
