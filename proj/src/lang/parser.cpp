#include <cctype>
#include <charconv>
#include <set>

#include "proc3d/graph.hpp"

namespace proc3d {
namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int column = 0;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

const std::set<std::string, std::less<>> kReserved = {"input", "output", "true", "false"};

class LineParser {
 public:
  LineParser(std::string_view text, int line, std::vector<Diagnostic>& diags)
      : line_(line), diags_(diags) {
    lex(text);
  }

  bool lex_ok() const { return lex_ok_; }
  bool empty() const { return tokens_.size() == 1; }

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  bool at_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == p;
  }
  bool at_ident(std::string_view word, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == word;
  }
  Token next() {
    Token t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool accept(std::string_view p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }
  bool at_end() const { return peek().kind == Tok::End; }

  void error(const char* code, std::string message) {
    diags_.push_back({Severity::Error, line_, std::move(message), code});
    failed_ = true;
  }
  void syntax_error(const std::string& what) {
    const Token& t = peek();
    const std::string found = t.kind == Tok::End ? "end of line" : "'" + t.text + "'";
    error(diag::kSyntaxError, what + ", found " + found + " (column " + std::to_string(t.column) + ")");
  }
  bool failed() const { return failed_; }
  int line() const { return line_; }

  std::optional<std::string> expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident) {
      syntax_error("expected " + what);
      return std::nullopt;
    }
    return next().text;
  }
  bool expect(std::string_view p) {
    if (accept(p)) return true;
    syntax_error("expected '" + std::string(p) + "'");
    return false;
  }

  /// Signed numeric literal.
  std::optional<Value> number() {
    bool negative = accept("-");
    if (peek().kind != Tok::Number) {
      syntax_error("expected a number");
      return std::nullopt;
    }
    const std::string text = next().text;
    const bool is_float = text.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) {
        error(diag::kLexError, "malformed number '" + text + "'");
        return std::nullopt;
      }
      return Value(negative ? -v : v);
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
      error(diag::kLexError, "integer literal out of range '" + text + "'");
      return std::nullopt;
    }
    return Value(negative ? -v : v);
  }

  std::optional<Expr> expr() {
    const Token& t = peek();
    if (t.kind == Tok::Number || at_punct("-")) {
      auto v = number();
      if (!v) return std::nullopt;
      return v->is_float() ? Expr::number(v->as_float()) : Expr::integer(v->as_int());
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "false") {
        const bool b = next().text == "true";
        return Expr::boolean(b);
      }
      std::string target = next().text;
      std::string port;
      if (accept(".")) {
        auto p = expect_ident("an output port name after '.'");
        if (!p) return std::nullopt;
        port = *p;
      }
      return Expr::ref(std::move(target), std::move(port));
    }
    if (accept("(")) {
      std::vector<Expr> items;
      for (int i = 0; i < 3; ++i) {
        if (i > 0 && !expect(",")) return std::nullopt;
        auto e = expr();
        if (!e) return std::nullopt;
        if (e->kind == Expr::Kind::Vec) {
          error(diag::kSyntaxError, "vector components must be scalars");
          return std::nullopt;
        }
        items.push_back(std::move(*e));
      }
      if (!expect(")")) return std::nullopt;
      return Expr::vec(std::move(items[0]), std::move(items[1]), std::move(items[2]));
    }
    syntax_error("expected an expression");
    return std::nullopt;
  }

 private:
  void lex(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      const int col = static_cast<int>(i) + 1;
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        ++i;
      } else if (is_ident_start(c)) {
        std::size_t j = i;
        while (j < s.size() && is_ident_char(s[j])) ++j;
        tokens_.push_back({Tok::Ident, std::string(s.substr(i, j - i)), col});
        i = j;
      } else if (is_digit(c)) {
        std::size_t j = i;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
          ++j;
          while (j < s.size() && is_digit(s[j])) ++j;
        }
        if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
          if (k < s.size() && is_digit(s[k])) {
            while (k < s.size() && is_digit(s[k])) ++k;
            j = k;
          }
        }
        tokens_.push_back({Tok::Number, std::string(s.substr(i, j - i)), col});
        i = j;
      } else if (c == '.' && i + 1 < s.size() && s[i + 1] == '.') {
        tokens_.push_back({Tok::Punct, "..", col});
        i += 2;
      } else if (std::string_view("=(),.:[]-").find(c) != std::string_view::npos) {
        tokens_.push_back({Tok::Punct, std::string(1, c), col});
        ++i;
      } else {
        // Report one diagnostic per offending code point.
        std::size_t j = i + 1;
        while (j < s.size() && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) ++j;
        error(diag::kLexError, "unexpected character '" + std::string(s.substr(i, j - i)) + "' at column " +
                                   std::to_string(col));
        lex_ok_ = false;
        i = j;
      }
    }
    tokens_.push_back({Tok::End, "", static_cast<int>(s.size()) + 1});
  }

  int line_;
  std::vector<Diagnostic>& diags_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool lex_ok_ = true;
  bool failed_ = false;
};

void parse_input(LineParser& p, Graph& g) {
  p.next();  // input
  auto name = p.expect_ident("a parameter name");
  if (!name) return;
  if (!p.expect(":")) return;
  auto type_name = p.expect_ident("a parameter type (float, int or bool)");
  if (!type_name) return;
  auto type = parse_value_type(*type_name);
  if (!type || (*type != ValueType::Float && *type != ValueType::Int && *type != ValueType::Bool)) {
    p.error(diag::kSyntaxError, "unknown parameter type '" + *type_name + "' (expected float, int or bool)");
    return;
  }
  if (!p.expect("=")) return;

  ParamSpec spec;
  spec.name = *name;
  spec.type = *type;
  spec.line = p.line();
  if (p.at_ident("true") || p.at_ident("false")) {
    spec.default_value = Value(p.next().text == "true");
  } else {
    auto v = p.number();
    if (!v) return;
    spec.default_value = *v;
  }
  if (p.accept("[")) {
    auto lo = p.number();
    if (!lo) return;
    if (!p.expect("..")) return;
    auto hi = p.number();
    if (!hi) return;
    if (!p.expect("]")) return;
    spec.range = std::make_pair(lo->as_float(), hi->as_float());
  }
  if (!p.at_end()) {
    p.syntax_error("unexpected trailing input");
    return;
  }
  // float parameters accept integer literals as defaults
  if (spec.type == ValueType::Float && spec.default_value.is_int())
    spec.default_value = Value(spec.default_value.as_float());
  g.params.push_back(std::move(spec));
}

void parse_output(LineParser& p, Graph& g, bool& seen_output) {
  p.next();  // output
  if (!p.expect("=")) return;
  auto e = p.expr();
  if (!e) return;
  if (!p.at_end()) {
    p.syntax_error("unexpected trailing input");
    return;
  }
  if (seen_output) {
    p.error(diag::kDuplicateOutput, "more than one output declaration");
    return;
  }
  seen_output = true;
  g.output = std::move(*e);
  g.output_line = p.line();
}

void parse_node(LineParser& p, Graph& g, const NodeRegistry& registry) {
  std::string id = p.next().text;
  if (!p.expect("=")) return;
  auto kind_name = p.expect_ident("a node kind");
  if (!kind_name) return;
  if (!p.expect("(")) return;

  std::vector<Expr> positional;
  std::vector<std::pair<std::string, Expr>> named;
  if (!p.accept(")")) {
    while (true) {
      if (p.peek().kind == Tok::Ident && p.at_punct("=", 1)) {
        std::string port = p.next().text;
        p.next();
        auto e = p.expr();
        if (!e) return;
        named.emplace_back(std::move(port), std::move(*e));
      } else {
        if (!named.empty()) {
          p.syntax_error("positional argument after named arguments");
          return;
        }
        auto e = p.expr();
        if (!e) return;
        positional.push_back(std::move(*e));
      }
      if (p.accept(")")) break;
      if (!p.expect(",")) return;
    }
  }
  if (!p.at_end()) {
    p.syntax_error("unexpected trailing input");
    return;
  }
  if (kReserved.count(id)) {
    p.error(diag::kSyntaxError, "'" + id + "' is reserved and cannot name a node");
    return;
  }

  Node node;
  node.id = std::move(id);
  node.line = p.line();
  const NodeKind* kind = registry.find(*kind_name);
  if (!kind) {
    // Keep the node so references to it resolve; validation reports the unknown kind once.
    node.kind = *kind_name;
    for (std::size_t i = 0; i < positional.size(); ++i) node.args.emplace("#" + std::to_string(i), positional[i]);
    for (auto& [port, e] : named) node.args.emplace(port, std::move(e));
    g.nodes.push_back(std::move(node));
    return;
  }
  node.kind = kind->name;
  if (kind->declaration_only) {
    p.error(diag::kSyntaxError, "'" + kind->name + "' has its own statement form and cannot be used as a node");
    return;
  }

  const bool variadic = !kind->inputs.empty() && kind->inputs.front().variadic;
  if (variadic) {
    if (!positional.empty()) node.args.emplace(kind->inputs.front().name, Expr::list(std::move(positional)));
  } else {
    if (positional.size() > kind->inputs.size()) {
      p.error(diag::kTooManyArguments, "'" + kind->name + "' takes at most " + std::to_string(kind->inputs.size()) +
                                           " arguments, got " + std::to_string(positional.size()));
      return;
    }
    for (std::size_t i = 0; i < positional.size(); ++i) node.args.emplace(kind->inputs[i].name, std::move(positional[i]));
  }
  for (auto& [port, e] : named) {
    const InputPort* in = kind->find_input(port);
    Expr value = std::move(e);
    if (in && in->variadic && value.kind != Expr::Kind::List) value = Expr::list({std::move(value)});
    if (!node.args.emplace(port, std::move(value)).second) {
      p.error(diag::kDuplicateArgument, "argument '" + port + "' given more than once");
      return;
    }
  }
  g.nodes.push_back(std::move(node));
}

}  // namespace

Expr Expr::number(double v) {
  Expr e;
  e.literal = Value(v);
  return e;
}
Expr Expr::integer(std::int64_t v) {
  Expr e;
  e.literal = Value(v);
  return e;
}
Expr Expr::boolean(bool v) {
  Expr e;
  e.literal = Value(v);
  return e;
}
Expr Expr::ref(std::string target, std::string port) {
  Expr e;
  e.kind = Kind::Ref;
  e.target = std::move(target);
  e.port = std::move(port);
  return e;
}
Expr Expr::vec(Expr x, Expr y, Expr z) {
  Expr e;
  e.kind = Kind::Vec;
  e.items = {std::move(x), std::move(y), std::move(z)};
  return e;
}
Expr Expr::list(std::vector<Expr> items) {
  Expr e;
  e.kind = Kind::List;
  e.items = std::move(items);
  return e;
}

ParseResult parse_pcg(std::string_view source, const NodeRegistry& registry) {
  ParseResult result;
  auto& diags = result.diagnostics;
  Graph g;
  bool seen_output = false;
  int line_no = 0;
  int last_content_line = 1;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t end = source.find('\n', start);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(start, end - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r\f\v") != std::string_view::npos) last_content_line = line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    LineParser p(line, line_no, diags);
    if (!p.empty()) {
      if (p.at_ident("input") && p.peek(1).kind == Tok::Ident) {
        parse_input(p, g);
      } else if (p.at_ident("output") && p.at_punct("=", 1)) {
        parse_output(p, g, seen_output);
      } else if (p.peek().kind == Tok::Ident && p.at_punct("=", 1)) {
        parse_node(p, g, registry);
      } else if (p.lex_ok()) {
        p.syntax_error("expected 'input', 'output' or '<id> = <kind>(...)'");
      }
    }
    if (end == source.size()) break;
    start = end + 1;
  }

  auto semantic = validate(g, registry);
  for (auto& d : semantic) {
    if (d.code == diag::kMissingOutput) d.line = last_content_line;
    diags.push_back(std::move(d));
  }
  if (!has_errors(diags)) result.graph = std::move(g);
  return result;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_ident_char(static_cast<char>(c))) {
      while (i < text.size() && is_ident_char(text[i])) ++i;
      ++count;
    } else {
      ++i;
      while (i < text.size() && (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) ++i;
      ++count;
    }
  }
  return count;
}

std::string format_diagnostic(const Diagnostic& d) {
  std::string s = d.line > 0 ? "line " + std::to_string(d.line) + ": " : std::string();
  s += d.severity == Severity::Error ? "error" : "warning";
  s += " [" + d.code + "] " + d.message;
  return s;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) return true;
  return false;
}

}  // namespace proc3d
