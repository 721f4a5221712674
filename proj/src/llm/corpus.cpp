#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proc3d/llm.hpp"

namespace proc3d {

std::string_view to_string(DetailLevel level) {
  switch (level) {
    case DetailLevel::Short: return "short";
    case DetailLevel::Medium: return "medium";
    case DetailLevel::Long: return "long";
  }
  return "short";
}

std::optional<DetailLevel> parse_detail_level(std::string_view s) {
  if (s == "short") return DetailLevel::Short;
  if (s == "medium") return DetailLevel::Medium;
  if (s == "long") return DetailLevel::Long;
  return std::nullopt;
}

std::vector<InstructionGraphPair> load_corpus(std::string_view jsonl) {
  std::vector<InstructionGraphPair> out;
  int line_no = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    std::string_view line = jsonl.substr(0, nl);
    jsonl.remove_prefix(nl == std::string_view::npos ? jsonl.size() : nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no) + ": ";
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw CorpusError(where + "malformed JSON");
    for (const char* key : {"id", "instruction", "detail_level", "pcg"})
      if (!j.contains(key) || !j[key].is_string()) throw CorpusError(where + "missing string field '" + key + "'");
    InstructionGraphPair p;
    p.id = j["id"].get<std::string>();
    p.instruction = j["instruction"].get<std::string>();
    auto level = parse_detail_level(j["detail_level"].get<std::string>());
    if (!level) throw CorpusError(where + "detail_level must be short, medium or long");
    p.detail_level = *level;
    p.pcg = j["pcg"].get<std::string>();
    auto parsed = parse_pcg(p.pcg);
    if (!parsed.ok()) {
      std::string msg = where + "pcg for '" + p.id + "' does not compile";
      for (const auto& d : parsed.diagnostics) msg += "\n  " + format_diagnostic(d);
      throw CorpusError(msg);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<InstructionGraphPair> load_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_corpus(ss.str());
}

std::string corpus_to_jsonl(const std::vector<InstructionGraphPair>& corpus) {
  std::string out;
  for (const auto& p : corpus) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["instruction"] = p.instruction;
    j["detail_level"] = std::string(to_string(p.detail_level));
    j["pcg"] = p.pcg;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {
std::vector<std::string> instructions(const std::vector<InstructionGraphPair>& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.push_back(p.instruction);
  return out;
}
}  // namespace

ExampleRetriever::ExampleRetriever(std::vector<InstructionGraphPair> corpus, Bm25Params params)
    : corpus_(std::move(corpus)), index_(instructions(corpus_), params) {}

std::vector<InstructionGraphPair> ExampleRetriever::retrieve(std::string_view query, std::size_t k) const {
  std::vector<InstructionGraphPair> out;
  for (auto i : index_.retrieve(query, k)) out.push_back(corpus_[i]);
  return out;
}

}  // namespace proc3d
