#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proc3d/bm25.hpp"
#include "proc3d/graph.hpp"
#include "proc3d/mesh.hpp"

namespace proc3d {

// ---------------------------------------------------------------------------------------------
// Corpus

enum class DetailLevel { Short, Medium, Long };
std::string_view to_string(DetailLevel level);
std::optional<DetailLevel> parse_detail_level(std::string_view s);

struct InstructionGraphPair {
  std::string id;
  std::string instruction;
  DetailLevel detail_level = DetailLevel::Short;
  std::string pcg;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON-Lines, one {"id","instruction","detail_level","pcg"} object per line. Every pcg must
/// parse cleanly. Throws CorpusError naming the offending line.
std::vector<InstructionGraphPair> load_corpus(std::string_view jsonl);
std::vector<InstructionGraphPair> load_corpus_file(const std::filesystem::path& path);
std::string corpus_to_jsonl(const std::vector<InstructionGraphPair>& corpus);

/// Index over the instructions of a corpus; retrieval returns the pairs themselves.
class ExampleRetriever {
 public:
  explicit ExampleRetriever(std::vector<InstructionGraphPair> corpus, Bm25Params params = {});
  std::vector<InstructionGraphPair> retrieve(std::string_view query, std::size_t k = 20) const;
  const Bm25Index& index() const { return index_; }
  const std::vector<InstructionGraphPair>& corpus() const { return corpus_; }

 private:
  std::vector<InstructionGraphPair> corpus_;
  Bm25Index index_;
};

// ---------------------------------------------------------------------------------------------
// Prompts

/// Short description of the language and the registered node kinds.
std::string grammar_primer();

struct Prompt {
  std::string text;
  std::size_t token_estimate = 0;
  std::size_t demonstrations = 0;
};

/// Primer, then one block per example, then the target instruction.
Prompt build_generation_prompt(std::string_view instruction, const std::vector<InstructionGraphPair>& examples,
                               std::string_view primer = grammar_primer());

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The current graph in a fenced block followed by the edit request. Throws ValidationError
/// on a blank instruction.
Prompt build_edit_prompt(const Graph& current, std::string_view instruction);

// ---------------------------------------------------------------------------------------------
// Responses and metrics

struct ExtractedGraph {
  ParseResult parse;
  std::string block;  ///< Text that was handed to the parser.
  bool ok() const { return parse.ok(); }
};

/// Uses the first fenced block if there is one, otherwise the span from the first to the last
/// line that looks like a statement. Reports NoGraphFound when neither exists.
ExtractedGraph extract_graph(std::string_view response);

/// True when the response yields a graph that evaluates at its defaults.
bool response_compiles(std::string_view response);
double compile_rate(const std::vector<std::string>& responses);

class EmptyReferenceSet : public std::invalid_argument {
 public:
  EmptyReferenceSet() : std::invalid_argument("similarity needs at least one reference mesh") {}
};

/// Centered on the bounding-box center with the longest axis scaled to 1.
Mesh unit_normalized(const Mesh& mesh);

/// Area-weighted surface samples from a deterministic generator.
std::vector<Vec3> sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed);

/// Mean of the two directed average nearest-neighbour distances.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

inline constexpr std::size_t kSimilaritySamples = 2048;
inline constexpr std::uint64_t kSimilaritySeed = 0x5eed5eedULL;

/// max over references of exp(-chamfer(sample(norm(mesh)), sample(norm(ref)))). An empty mesh
/// on either side scores 0. Throws EmptyReferenceSet.
double similarity_measure(const Mesh& mesh, const std::vector<Mesh>& references);

// ---------------------------------------------------------------------------------------------
// Endpoint client

enum class LlmErrorKind { Timeout, HttpError, AuthError, ReplayMiss };
std::string_view to_string(LlmErrorKind kind);

class LlmError : public std::runtime_error {
 public:
  LlmError(LlmErrorKind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind_(kind), status_(status) {}
  LlmErrorKind kind() const { return kind_; }
  int status() const { return status_; }
  /// Timeouts, 429 and 5xx responses may succeed on retry.
  bool retryable() const {
    return kind_ == LlmErrorKind::Timeout || (kind_ == LlmErrorKind::HttpError && (status_ == 429 || status_ >= 500));
  }

 private:
  LlmErrorKind kind_;
  int status_;
};

enum class LlmMode {
  Replay,  ///< Recorded responses only; a miss is ReplayMiss.
  Record,  ///< Live call, then store the response.
  Live,
};

struct LlmEndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string token_env = "PCG_LLM_TOKEN";
  int max_output_tokens = 2048;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  LlmMode mode = LlmMode::Replay;
  std::filesystem::path replay_dir = "fixtures/llm";
};

/// Hex SHA-256 of the prompt; names the replay file `<replay_dir>/<key>.txt`.
std::string prompt_key(std::string_view prompt);

/// Sends the prompt to an OpenAI-compatible chat-completions endpoint, or serves it from the
/// replay store. Replay writes are serialized process-wide.
std::string call_llm(const LlmEndpointConfig& config, std::string_view prompt);

/// Stores a response under the prompt's key (atomic replace).
void record_response(const std::filesystem::path& replay_dir, std::string_view prompt, std::string_view response);

// ---------------------------------------------------------------------------------------------
// Export harness

struct ExportRecord {
  std::string instruction;
  std::string prompt_key;
  bool compiled = false;
  std::string obj_file;  ///< Relative to the output directory; empty when nothing compiled.
  std::string error;
};

/// Generates a graph per instruction and writes `<i>.obj` plus `manifest.jsonl` (one
/// {"instruction","prompt_key","compiled","obj","error"} record per instruction) so mesh
/// scores can be computed by external tools.
std::vector<ExportRecord> export_prompt_meshes(const std::vector<std::string>& instructions,
                                               const LlmEndpointConfig& config, const ExampleRetriever* retriever,
                                               std::size_t k, const std::filesystem::path& out_dir);

}  // namespace proc3d
