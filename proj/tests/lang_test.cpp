#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "proc3d/graph.hpp"
#include "proc3d/json_io.hpp"

using namespace proc3d;

namespace {

std::string read(const std::string& rel) {
  std::ifstream in(std::string(PROC3D_SOURCE_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> codes(const std::vector<Diagnostic>& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds) out.push_back(d.code);
  return out;
}

const char* kMinimal = "input h: float = 1.0\nc = cube()\nout = scale(geometry=c, s=(1,1,h))\noutput = out\n";

}  // namespace

TEST(Parse, TableGraph) {
  auto r = parse_pcg(read("samples/table.pcg"));
  ASSERT_TRUE(r.ok()) << format_diagnostic(r.diagnostics.at(0));
  const Graph& g = *r.graph;
  EXPECT_EQ(g.params.size(), 4u);
  EXPECT_GE(g.nodes.size(), 10u);
  ASSERT_TRUE(g.output);
  EXPECT_EQ(node_output_type(g, *g.find_node(g.output->target)), ValueType::Geometry);
  std::vector<std::string> names;
  for (const auto& p : list_params(g)) {
    names.push_back(p.name);
    EXPECT_EQ(p.type, ValueType::Float);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"table_width", "table_length", "leg_height", "leg_radius"}));
}

TEST(Parse, MinimalProgram) {
  auto r = parse_pcg(kMinimal);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.graph->params.size(), 1u);
  EXPECT_EQ(r.graph->nodes.size(), 2u);
}

TEST(Parse, UnresolvedOutputIsOneDiagnosticAtItsLine) {
  auto r = parse_pcg("c = cube()\noutput = missing_id\n");
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, diag::kUnresolvedReference);
  EXPECT_EQ(r.diagnostics[0].line, 2);
  EXPECT_EQ(r.diagnostics[0].severity, Severity::Error);
}

TEST(Parse, EachErrorCodeIsDistinct) {
  struct Case {
    const char* src;
    const char* code;
    int line;
  };
  const std::vector<Case> cases = {
      {"c = cube() @\noutput = c\n", diag::kLexError, 1},
      {"c = cube(\noutput = c\n", diag::kSyntaxError, 1},
      {"c = torus()\noutput = c\n", diag::kUnknownNodeKind, 1},
      {"c = cube()\nc = cube()\noutput = c\n", diag::kDuplicateId, 2},
      {"a = translate(b)\nb = translate(a)\noutput = a\n", diag::kCycleDetected, 1},
      {"x = add(1.0, 2.0)\nm = translate(x)\noutput = m\n", diag::kTypeMismatch, 2},
      {"c = cube()\n", diag::kMissingOutput, 1},
      {"c = cube()\noutput = c\noutput = c\n", diag::kDuplicateOutput, 3},
      {"c = cube(width=1.0)\noutput = c\n", diag::kUnknownPort, 1},
      {"r = rectangle(1.0)\nf = fill(r)\noutput = f\n", diag::kMissingArgument, 1},
      {"c = cube(size=(1,1,1), size=(2,2,2))\noutput = c\n", diag::kDuplicateArgument, 1},
      {"c = cube((1,1,1), 2.0)\noutput = c\n", diag::kTooManyArguments, 1},
      {"input w: float = 9.0 [0.0..1.0]\nc = cube((w,w,w))\noutput = c\n", diag::kInvalidDefault, 1},
  };
  std::set<std::string> seen;
  for (const auto& c : cases) {
    auto r = parse_pcg(c.src);
    EXPECT_FALSE(r.ok()) << c.src;
    bool found = false;
    for (const auto& d : r.diagnostics)
      if (d.code == c.code) {
        found = true;
        EXPECT_EQ(d.line, c.line) << c.src;
      }
    EXPECT_TRUE(found) << c.src << " expected " << c.code;
    seen.insert(c.code);
  }
  EXPECT_EQ(seen.size(), cases.size());
}

TEST(Parse, ReportsEveryFaultyLine) {
  auto r = parse_pcg("a = cube() $\nb = torus()\nc = cube(\nd = cube()\noutput = d\n");
  EXPECT_FALSE(r.ok());
  std::set<int> lines;
  for (const auto& d : r.diagnostics) lines.insert(d.line);
  EXPECT_TRUE(lines.count(1) && lines.count(2) && lines.count(3));
}

TEST(Parse, CommentsPositionalNamedAndPorts) {
  auto r = parse_pcg(
      "# header\n"
      "input n: int = 4 [3..10]   # sides\n"
      "v = combine_xyz(z=2.0)\n"
      "c = cylinder(0.5, depth=v.vector, segments=n)\n"
      "output = c\n");
  EXPECT_FALSE(r.ok());  // a vec3 cannot feed the float depth port
  EXPECT_EQ(codes(r.diagnostics), std::vector<std::string>{diag::kTypeMismatch});

  auto ok = parse_pcg(
      "input n: int = 4 [3..10]\n"
      "v = combine_xyz(z=2.0)\n"
      "c = cylinder(0.5, segments=n)\n"
      "m = translate(c, v.vector)\n"
      "output = m\n");
  ASSERT_TRUE(ok.ok());
  const Node* c = ok.graph->find_node("c");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->args.at("radius"), Expr::number(0.5));
  EXPECT_EQ(c->args.at("segments"), Expr::ref("n"));
  EXPECT_EQ(ok.graph->find_node("m")->args.at("t"), Expr::ref("v", "vector"));
}

TEST(Parse, KindLookupIsCaseInsensitiveWithAlias) {
  auto r = parse_pcg("q = Quadrilateral(1.0, 2.0)\nf = FILL(q)\noutput = f\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.graph->find_node("q")->kind, "rectangle");
  EXPECT_EQ(r.graph->find_node("f")->kind, "fill");
}

TEST(Parse, IntWidensToFloatOnly) {
  EXPECT_TRUE(parse_pcg("input n: int = 2\nc = cylinder(n, n)\noutput = c\n").ok());
  auto bad = parse_pcg("input x: float = 2.0\nc = cylinder(1.0, 1.0, x)\noutput = c\n");
  EXPECT_FALSE(bad.ok());
  EXPECT_EQ(codes(bad.diagnostics), std::vector<std::string>{diag::kTypeMismatch});
}

TEST(Parse, BoolParamOnSwitch) {
  auto r = parse_pcg("input has_arms: bool = true\nc = cube()\ns = switch(has_arms, c)\noutput = s\n");
  ASSERT_TRUE(r.ok());
  auto ps = list_params(*r.graph);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].name, "has_arms");
  EXPECT_EQ(ps[0].type, ValueType::Bool);
  EXPECT_TRUE(list_params(*parse_pcg("c = cube()\noutput = c\n").graph).empty());
}

TEST(Parse, ReservedNamesRejected) {
  EXPECT_FALSE(parse_pcg("true = cube()\noutput = true\n").ok());
  EXPECT_FALSE(parse_pcg("input = cube()\noutput = input\n").ok());
}

TEST(Print, FixedPointAndCanonicalOrder) {
  auto r = parse_pcg(kMinimal);
  ASSERT_TRUE(r.ok());
  const std::string once = print_pcg(*r.graph);
  const std::string twice = print_pcg(*parse_pcg(once).graph);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once, "input h: float = 1.0\nc = cube()\nout = scale(c, (1, 1, h))\noutput = out\n");

  // Forward references come out in topological order.
  auto fwd = parse_pcg("t = join(a, b)\nb = translate(a, (1.0, 0.0, 0.0))\na = cube()\noutput = t\n");
  ASSERT_TRUE(fwd.ok());
  EXPECT_EQ(print_pcg(*fwd.graph), "a = cube()\nb = translate(a, (1.0, 0.0, 0.0))\nt = join(a, b)\noutput = t\n");
}

TEST(Print, TableRoundTripAndTokenBudget) {
  auto r = parse_pcg(read("samples/table.pcg"));
  ASSERT_TRUE(r.ok());
  const std::string text = print_pcg(*r.graph);
  auto again = parse_pcg(text);
  ASSERT_TRUE(again.ok());
  EXPECT_TRUE(structurally_equal(*r.graph, *again.graph));
  EXPECT_LT(count_tokens(text), 800u);
}

TEST(Validate, ProgrammaticGraphs) {
  EXPECT_TRUE(validate(*parse_pcg(read("samples/table.pcg")).graph).empty());

  Graph g;
  Node x{"x", "add", {{"a", Expr::number(1)}, {"b", Expr::number(2)}}, 0};
  Node m{"m", "translate", {{"geometry", Expr::ref("x")}}, 0};
  g.nodes = {x, m};
  g.output = Expr::ref("m");
  EXPECT_EQ(codes(validate(g)), std::vector<std::string>{diag::kTypeMismatch});

  Graph self;
  self.nodes = {Node{"s", "translate", {{"geometry", Expr::ref("s")}}, 0}};
  self.output = Expr::ref("s");
  EXPECT_EQ(codes(validate(self)), std::vector<std::string>{diag::kCycleDetected});
}

TEST(TopoOrder, ChainAndDiamond) {
  auto chain = parse_pcg("c = translate(b)\nb = translate(a)\na = cube()\noutput = c\n");
  ASSERT_TRUE(chain.ok());
  EXPECT_EQ(topo_order(*chain.graph), (std::vector<std::string>{"a", "b", "c"}));

  auto diamond = parse_pcg("d = join(b, c)\nc = translate(a)\nb = rotate(a)\na = cube()\noutput = d\n");
  ASSERT_TRUE(diamond.ok());
  auto order = topo_order(*diamond.graph);
  EXPECT_EQ(order.front(), "a");
  EXPECT_EQ(order.back(), "d");

  Graph cyc;
  cyc.nodes = {Node{"a", "translate", {{"geometry", Expr::ref("b")}}, 0},
               Node{"b", "translate", {{"geometry", Expr::ref("a")}}, 0}};
  cyc.output = Expr::ref("a");
  EXPECT_THROW(topo_order(cyc), CycleError);
}

TEST(Tokens, Rules) {
  EXPECT_EQ(count_tokens("a = cube()"), 5u);
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(count_tokens("  \n\t "), 0u);
  EXPECT_EQ(count_tokens("leg_height2 = 1.5"), 5u);  // leg_height2 = 1 . 5
  EXPECT_EQ(count_tokens("é"), 1u);
  EXPECT_LE(count_tokens(std::string("ab") + "cd"), count_tokens("ab") + count_tokens("cd") + 1);
}

TEST(Json, RoundTripAndStableBytes) {
  auto g = *parse_pcg(read("samples/table.pcg")).graph;
  const std::string a = graph_to_json_text(g);
  const std::string b = graph_to_json_text(*parse_pcg(print_pcg(g)).graph);
  EXPECT_EQ(a, b);
  auto back = graph_from_json_text(a);
  ASSERT_TRUE(back.ok());
  EXPECT_TRUE(structurally_equal(g, *back.graph));
  auto j = nlohmann::ordered_json::parse(a);
  EXPECT_EQ(j.begin().key(), "params");
  EXPECT_EQ(j["nodes"][0]["id"], "inset_w");
}

TEST(Json, SchemaProblemsAreDiagnostics) {
  auto r = graph_from_json_text(R"({"params": 3, "nodes": [], "output": {"ref": "x"}})");
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.diagnostics.empty());
  EXPECT_FALSE(graph_from_json_text("{not json").ok());
}
