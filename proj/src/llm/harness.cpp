#include <fstream>

#include <nlohmann/json.hpp>

#include "proc3d/evaluator.hpp"
#include "proc3d/llm.hpp"
#include "proc3d/mesh_io.hpp"

namespace proc3d {

std::vector<ExportRecord> export_prompt_meshes(const std::vector<std::string>& instructions,
                                               const LlmEndpointConfig& config, const ExampleRetriever* retriever,
                                               std::size_t k, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<ExportRecord> records;
  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    ExportRecord rec;
    rec.instruction = instructions[i];
    const auto examples = retriever ? retriever->retrieve(rec.instruction, k) : std::vector<InstructionGraphPair>{};
    const Prompt prompt = build_generation_prompt(rec.instruction, examples);
    rec.prompt_key = prompt_key(prompt.text);
    try {
      const auto extracted = extract_graph(call_llm(config, prompt.text));
      if (!extracted.ok()) {
        rec.error = extracted.parse.diagnostics.empty() ? "no graph" : format_diagnostic(extracted.parse.diagnostics.front());
      } else {
        const MeshPtr mesh = evaluate(*extracted.parse.graph);
        rec.obj_file = std::to_string(i) + ".obj";
        std::ofstream(out_dir / rec.obj_file, std::ios::binary | std::ios::trunc) << export_obj(*mesh);
        rec.compiled = true;
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    nlohmann::ordered_json j;
    j["instruction"] = rec.instruction;
    j["prompt_key"] = rec.prompt_key;
    j["compiled"] = rec.compiled;
    j["obj"] = rec.obj_file;
    j["error"] = rec.error;
    manifest << j.dump() << '\n';
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace proc3d
