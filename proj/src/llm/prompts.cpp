#include <regex>

#include "proc3d/evaluator.hpp"
#include "proc3d/llm.hpp"

namespace proc3d {

namespace {

std::string describe_port(const InputPort& in) {
  std::string s = in.name + ": " + std::string(to_string(in.type));
  if (in.variadic) s += "...";
  if (in.default_value) {
    const Value& d = *in.default_value;
    if (d.type() == ValueType::Geometry) s += " = empty";
    else if (d.type() == ValueType::Vec3) {
      const Vec3& v = d.as_vec3();
      s += " = (" + format_float(v.x) + ", " + format_float(v.y) + ", " + format_float(v.z) + ")";
    } else if (d.type() == ValueType::Int) s += " = " + std::to_string(d.as_int());
    else if (d.type() == ValueType::Bool) s += d.as_bool() ? " = true" : " = false";
    else s += " = " + format_float(d.as_float());
  }
  return s;
}

Prompt assemble(const std::vector<std::string>& parts, std::size_t demonstrations) {
  Prompt p;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) p.text += '\n';
    p.text += parts[i];
    p.token_estimate += count_tokens(parts[i]);
  }
  p.demonstrations = demonstrations;
  return p;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string grammar_primer() {
  std::string s =
      "You write procedural compact graphs (PCG): one statement per line describing a 3D model.\n"
      "Statements:\n"
      "  input <name>: float|int|bool = <default> [<lo>..<hi>]   declares an editable parameter\n"
      "  <id> = <kind>(<args>)                                  creates a node\n"
      "  output = <id>                                          the geometry to return (exactly once)\n"
      "Arguments are positional in port order, then optional <port>=<expr> pairs. Expressions are numbers,\n"
      "true/false, a parameter name, a node id (or <id>.<port>), or a vector (x, y, z) of scalars.\n"
      "Angles are radians. Rotations use XYZ Euler angles; transform scales, then rotates, then translates.\n"
      "'#' starts a comment. int values may feed float ports; no other conversions happen.\n"
      "Node kinds (ports, with defaults where optional):\n";
  for (const NodeKind& kind : NodeRegistry::builtin().kinds()) {
    const NodeKind* k = &kind;
    if (k->declaration_only) continue;
    s += "  " + k->name + "(";
    for (std::size_t i = 0; i < k->inputs.size(); ++i) s += (i ? ", " : "") + describe_port(k->inputs[i]);
    s += ") -> " + std::string(to_string(k->outputs.front().type));
    if (!k->aliases.empty()) s += "  [alias " + k->aliases.front() + "]";
    s += "\n";
  }
  return s;
}

Prompt build_generation_prompt(std::string_view instruction, const std::vector<InstructionGraphPair>& examples,
                               std::string_view primer) {
  std::vector<std::string> parts{std::string(primer)};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    parts.push_back("### Example " + std::to_string(i + 1));
    parts.push_back("Instruction: " + examples[i].instruction);
    parts.push_back("```pcg\n" + std::string(trim(examples[i].pcg)) + "\n```");
  }
  parts.push_back("### Task");
  parts.push_back("Instruction: " + std::string(trim(instruction)));
  parts.push_back("Answer with the complete PCG in one ```pcg fenced block.");
  return assemble(parts, examples.size());
}

Prompt build_edit_prompt(const Graph& current, std::string_view instruction) {
  if (blank(instruction)) throw ValidationError("edit instruction must not be empty");
  std::vector<std::string> parts{
      "Current PCG:",
      "```pcg\n" + print_pcg(current) + "```",
      grammar_primer(),
      "Edit request: " + std::string(trim(instruction)),
      "Return the complete revised PCG in one ```pcg fenced block. Keep existing parameter names and "
      "change only what the request needs; to hide a part, set its boolean parameter's default to false.",
  };
  return assemble(parts, 0);
}

ExtractedGraph extract_graph(std::string_view response) {
  ExtractedGraph out;
  const auto fence = response.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = response.find('\n', fence);
    body_start = body_start == std::string_view::npos ? response.size() : body_start + 1;
    auto close = response.find("```", body_start);
    out.block = std::string(response.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                                                           : close - body_start));
  } else {
    static const std::regex statement(
        R"(^\s*(input\s+[A-Za-z_]\w*\s*:|output\s*=|[A-Za-z_]\w*\s*=\s*[A-Za-z_]\w*\s*\())");
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos <= response.size();) {
      auto nl = response.find('\n', pos);
      if (nl == std::string_view::npos) nl = response.size();
      lines.push_back(response.substr(pos, nl - pos));
      pos = nl + 1;
    }
    std::optional<std::size_t> first, last;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (std::regex_search(lines[i].begin(), lines[i].end(), statement)) {
        if (!first) first = i;
        last = i;
      }
    }
    if (first)
      for (std::size_t i = *first; i <= *last; ++i) out.block += std::string(lines[i]) + "\n";
  }
  if (blank(out.block)) {
    out.parse.diagnostics.push_back({Severity::Error, 1, "response contains no graph", diag::kNoGraphFound});
    return out;
  }
  out.parse = parse_pcg(out.block);
  return out;
}

bool response_compiles(std::string_view response) {
  auto g = extract_graph(response);
  if (!g.ok()) return false;
  try {
    evaluate(*g.parse.graph);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

double compile_rate(const std::vector<std::string>& responses) {
  if (responses.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : responses) ok += response_compiles(r) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(responses.size());
}

}  // namespace proc3d
