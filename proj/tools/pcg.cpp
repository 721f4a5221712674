// Command-line front end for the PCG toolkit.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "proc3d/evaluator.hpp"
#include "proc3d/extractor.hpp"
#include "proc3d/http_server.hpp"
#include "proc3d/json_io.hpp"
#include "proc3d/llm.hpp"
#include "proc3d/mesh_io.hpp"
#include "proc3d/service.hpp"
#include "proc3d/transpiler.hpp"

namespace fs = std::filesystem;
using namespace proc3d;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void print_diagnostics(const std::string& file, const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << file << ":" << format_diagnostic(d) << "\n";
}

/// Parses a file or exits with its diagnostics.
Graph load_graph(const std::string& file) {
  auto r = parse_pcg(read_file(file));
  print_diagnostics(file, r.diagnostics);
  if (!r.ok()) throw CLI::RuntimeError(1);
  return std::move(*r.graph);
}

Value parse_binding(const Graph& g, const std::string& name, const std::string& text) {
  const ParamSpec* p = g.find_param(name);
  if (!p) throw std::runtime_error("unknown parameter '" + name + "'");
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("cannot parse value '" + text + "' for " + name);
  return value_from_json(j, *p);
}

struct LlmOptions {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string token_env = "PCG_LLM_TOKEN";
  std::string replay_dir = "fixtures/llm";
  bool live = false;
  bool record = false;
  int timeout_ms = 60000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--endpoint", endpoint, "OpenAI-compatible base URL");
    cmd->add_option("--model", model, "Model name");
    cmd->add_option("--token-env", token_env, "Environment variable holding the API token");
    cmd->add_option("--replay-dir", replay_dir, "Recorded response store");
    cmd->add_flag("--replay", "Serve responses from the replay store only (default)");
    cmd->add_flag("--live", live, "Call the endpoint");
    cmd->add_flag("--record", record, "Call the endpoint and store responses");
    cmd->add_option("--timeout-ms", timeout_ms, "Request timeout");
  }

  LlmEndpointConfig config() const {
    LlmEndpointConfig c;
    c.base_url = endpoint;
    c.model = model;
    c.token_env = token_env;
    c.replay_dir = replay_dir;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.mode = record ? LlmMode::Record : (live ? LlmMode::Live : LlmMode::Replay);
    return c;
  }
};

double median_ms(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/// Random in-range value of the same type, different from the current one when possible.
Value random_value(const ParamSpec& p, std::mt19937_64& rng) {
  switch (p.type) {
    case ValueType::Bool: return Value(!p.default_value.as_bool());
    case ValueType::Int: {
      const auto lo = p.range ? static_cast<std::int64_t>(p.range->first) : p.default_value.as_int() - 5;
      const auto hi = p.range ? static_cast<std::int64_t>(p.range->second) : p.default_value.as_int() + 5;
      return Value(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng));
    }
    default: {
      const double d = p.default_value.as_float();
      const double lo = p.range ? p.range->first : d - 1.0, hi = p.range ? p.range->second : d + 1.0;
      return Value(std::uniform_real_distribution<double>(lo, hi)(rng));
    }
  }
}

int run_eval(const std::string& file, const std::vector<std::string>& sets, const std::string& out, bool bench,
             int iterations) {
  Graph g = load_graph(file);
  Bindings bindings;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects name=value, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    bindings.emplace(name, parse_binding(g, name, s.substr(eq + 1)));
  }
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  EvalSession session(g, bindings);
  const double full_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  const Mesh& mesh = *session.mesh();
  const Bounds b = bounds_of(mesh);
  std::cout << "vertices " << mesh.vertices.size() << "\ntriangles " << mesh.triangles.size() << "\n";
  if (b.valid)
    std::cout << "bounds " << b.lo.x << " " << b.lo.y << " " << b.lo.z << " .. " << b.hi.x << " " << b.hi.y << " "
              << b.hi.z << "\n";
  if (!out.empty()) write_file(out, export_obj(mesh));

  if (bench) {
    std::vector<double> fresh, incremental;
    std::mt19937_64 rng(7);
    const auto& params = g.params;
    for (int i = 0; i < iterations; ++i) {
      auto s0 = clock::now();
      (void)evaluate(g, bindings);
      fresh.push_back(std::chrono::duration<double, std::milli>(clock::now() - s0).count());
      if (params.empty()) continue;
      const ParamSpec& p = params[rng() % params.size()];
      Bindings delta{{p.name, random_value(p, rng)}};
      auto s1 = clock::now();
      session.reevaluate(delta);
      incremental.push_back(std::chrono::duration<double, std::milli>(clock::now() - s1).count());
    }
    std::cout << "first evaluate ms " << full_ms << "\n"
              << "evaluate median ms " << median_ms(fresh) << "\n"
              << "reevaluate median ms " << median_ms(incremental) << " (" << incremental.size()
              << " single-parameter deltas)\n";
  }
  return 0;
}

int run_extract(const std::string& input, const std::string& out_dir, const std::string& coord_rot, bool no_merge,
                bool no_global, bool from_corners) {
  ExtractionConfig cfg;
  cfg.coord_rotation = parse_coord_rotation(coord_rot);
  cfg.merge_same_label = !no_merge;
  cfg.expose_global_rotation = !no_global;
  cfg.recover_from_corners = from_corners;
  std::vector<fs::path> inputs;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".json") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.push_back(input);
  }
  fs::create_directories(out_dir);
  int failures = 0;
  for (const auto& in : inputs) {
    try {
      const Extraction ex = build_pcg(load_hierarchy_file(in), cfg);
      const fs::path base = fs::path(out_dir) / in.stem();
      fs::path pcg_path = base;
      pcg_path += ".pcg";
      fs::path meta_path = base;
      meta_path += ".meta.json";
      save_graph(ex.graph, pcg_path);
      write_file(meta_path, ex.meta().dump(2) + "\n");
      std::cout << pcg_path.string() << ": " << ex.graph.params.size() << " params, " << ex.graph.nodes.size()
                << " nodes\n";
    } catch (const std::exception& e) {
      std::cerr << in.string() << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures ? 1 : 0;
}

int run_report(const std::string& dir, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pcg") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::ostringstream csv;
  csv << "file,pcg_tokens";
  for (const auto& b : backend_names()) csv << "," << b << "_tokens," << b << "_ratio";
  csv << "\n";
  double sum = 0;
  std::size_t n = 0;
  for (const auto& f : files) {
    auto r = parse_pcg(read_file(f));
    if (!r.ok()) {
      print_diagnostics(f.string(), r.diagnostics);
      continue;
    }
    const auto rep = compactness_report(*r.graph);
    csv << f.filename().string() << "," << rep.pcg_tokens;
    for (const auto& b : backend_names()) csv << "," << rep.tokens.at(b) << "," << rep.ratios.at(b);
    csv << "\n";
    sum += rep.ratios.at("blender_python");
    ++n;
  }
  if (out.empty()) std::cout << csv.str();
  else write_file(out, csv.str());
  if (n) std::cerr << "mean blender_python/pcg ratio " << sum / static_cast<double>(n) << " over " << n << " graphs\n";
  return 0;
}

std::shared_ptr<const ExampleRetriever> load_retriever(const std::string& corpus) {
  if (corpus.empty() || !fs::exists(corpus)) return nullptr;
  return std::make_shared<const ExampleRetriever>(load_corpus_file(corpus));
}

int print_extracted(const std::string& raw, const std::string& out) {
  auto g = extract_graph(raw);
  if (!g.ok()) {
    print_diagnostics("response", g.parse.diagnostics);
    std::cerr << "--- raw response ---\n" << raw << "\n";
    return 1;
  }
  const std::string text = print_pcg(*g.parse.graph);
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Procedural compact graph toolkit"};
  app.require_subcommand(1);

  std::string file, out, backend = "blender_python", instruction, dir, corpus = "samples/corpus.jsonl";
  bool as_json = false, write_back = false, bench = false;
  int iterations = 200;
  std::vector<std::string> sets;

  auto* parse = app.add_subcommand("parse", "Parse and validate a graph");
  parse->add_option("file", file)->required();
  parse->add_flag("--json", as_json, "Print the graph as JSON");

  auto* fmt = app.add_subcommand("fmt", "Print the canonical form of a graph");
  fmt->add_option("file", file)->required();
  fmt->add_flag("-w,--write", write_back, "Rewrite the file in place");

  auto* tokens = app.add_subcommand("tokens", "Count tokens of a file");
  tokens->add_option("file", file)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a graph to a mesh");
  eval->add_option("file", file)->required();
  eval->add_option("--set", sets, "Bind a parameter: name=value");
  eval->add_option("--out", out, "Write the mesh as OBJ");
  eval->add_flag("--bench", bench, "Time fresh and incremental evaluation");
  eval->add_option("--iterations", iterations, "Benchmark iterations");

  std::string coord_rot = "none";
  bool no_merge = false, no_global = false, from_corners = false;
  auto* extract = app.add_subcommand("extract", "Convert part hierarchies to graphs");
  extract->add_option("input", file, "Hierarchy JSON file or directory")->required();
  extract->add_option("--out", out, "Output directory")->required();
  extract->add_option("--coord-rot", coord_rot, "Signed axis mapping applied on ingest, e.g. x-zy, or none");
  extract->add_flag("--no-merge", no_merge, "Keep same-label siblings separate");
  extract->add_flag("--no-global-rotation", no_global, "Do not expose a root rotation");
  extract->add_flag("--from-corners", from_corners, "Recover leaf transforms by PCA over box corners");

  auto* transpile = app.add_subcommand("transpile", "Emit a graph for another engine");
  transpile->add_option("file", file)->required();
  transpile->add_option("--backend", backend)->check(CLI::IsMember({"blender_python", "json"}));
  transpile->add_option("--out", out, "Output path (default stdout)");

  auto* report = app.add_subcommand("report", "Token compactness CSV for every .pcg in a directory");
  report->add_option("dir", dir)->required();
  report->add_option("--out", out, "CSV path (default stdout)");

  LlmOptions llm;
  std::size_t k = 20;
  bool print_prompt = false;
  std::string store_response;
  auto* generate = app.add_subcommand("generate", "Generate a graph from an instruction");
  generate->add_option("instruction", instruction)->required();
  generate->add_option("--k", k, "Retrieved demonstrations");
  generate->add_option("--corpus", corpus, "Instruction-graph corpus (JSON-Lines)");
  generate->add_option("--out", out, "Write the graph here");
  generate->add_flag("--print-prompt", print_prompt, "Print the prompt and its replay key instead of calling");
  generate->add_option("--store-response", store_response, "Record this file as the response to the prompt");
  llm.attach(generate);

  auto* edit = app.add_subcommand("edit", "Revise a graph from an instruction");
  edit->add_option("file", file)->required();
  edit->add_option("instruction", instruction)->required();
  edit->add_option("--out", out, "Write the revised graph here");
  edit->add_flag("--print-prompt", print_prompt, "Print the prompt and its replay key instead of calling");
  edit->add_option("--store-response", store_response, "Record this file as the response to the prompt");
  llm.attach(edit);

  std::string labels;
  auto* bench_compile = app.add_subcommand("bench-compile", "Compile rate over recorded responses");
  bench_compile->add_option("dir", dir)->required();
  bench_compile->add_option("--labels", labels, "JSON map of file name to expected compile outcome");

  std::string prompts_file;
  auto* export_pairs = app.add_subcommand("export-pairs", "Write (instruction, OBJ) pairs for external scoring");
  export_pairs->add_option("prompts", prompts_file, "Text file with one instruction per line")->required();
  export_pairs->add_option("--out", out, "Output directory")->required();
  export_pairs->add_option("--k", k, "Retrieved demonstrations");
  export_pairs->add_option("--corpus", corpus, "Instruction-graph corpus (JSON-Lines)");
  llm.attach(export_pairs);

  unsigned short port = 8787;
  std::string host = "127.0.0.1", data_dir = "data/sessions", token;
  std::size_t threads = 4;
  auto* serve = app.add_subcommand("serve", "Run the editing service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--data-dir", data_dir, "Session event logs");
  serve->add_option("--corpus", corpus, "Instruction-graph corpus (JSON-Lines)");
  serve->add_option("--token", token, "Require this bearer token");
  serve->add_option("--threads", threads);
  llm.attach(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse) {
      Graph g = load_graph(file);
      if (as_json) std::cout << graph_to_json_text(g, 2);
      else std::cout << "ok: " << g.params.size() << " params, " << g.nodes.size() << " nodes\n";
      return 0;
    }
    if (*fmt) {
      const std::string text = print_pcg(load_graph(file));
      if (write_back) write_file(file, text);
      else std::cout << text;
      return 0;
    }
    if (*tokens) {
      std::cout << count_tokens(read_file(file)) << "\n";
      return 0;
    }
    if (*eval) return run_eval(file, sets, out, bench, iterations);
    if (*extract) return run_extract(file, out, coord_rot, no_merge, no_global, from_corners);
    if (*transpile) {
      const std::string text = find_backend(backend)->emit(load_graph(file));
      if (out.empty()) std::cout << text;
      else write_file(out, text);
      return 0;
    }
    if (*report) return run_report(dir, out);
    if (*generate) {
      auto retriever = load_retriever(corpus);
      const auto examples = retriever ? retriever->retrieve(instruction, k) : std::vector<InstructionGraphPair>{};
      const Prompt prompt = build_generation_prompt(instruction, examples);
      if (print_prompt) {
        std::cout << prompt.text << "\n--- key " << prompt_key(prompt.text) << " tokens " << prompt.token_estimate << "\n";
        return 0;
      }
      if (!store_response.empty()) {
        record_response(llm.replay_dir, prompt.text, read_file(store_response));
        std::cout << prompt_key(prompt.text) << "\n";
        return 0;
      }
      return print_extracted(call_llm(llm.config(), prompt.text), out);
    }
    if (*edit) {
      const Prompt prompt = build_edit_prompt(load_graph(file), instruction);
      if (print_prompt) {
        std::cout << prompt.text << "\n--- key " << prompt_key(prompt.text) << " tokens " << prompt.token_estimate << "\n";
        return 0;
      }
      if (!store_response.empty()) {
        record_response(llm.replay_dir, prompt.text, read_file(store_response));
        std::cout << prompt_key(prompt.text) << "\n";
        return 0;
      }
      return print_extracted(call_llm(llm.config(), prompt.text), out);
    }
    if (*bench_compile) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      std::vector<std::string> responses;
      std::size_t mismatches = 0;
      nlohmann::json expected = labels.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(labels));
      for (const auto& f : files) {
        responses.push_back(read_file(f));
        const bool ok = response_compiles(responses.back());
        const std::string name = f.filename().string();
        if (expected.contains(name) && expected[name].get<bool>() != ok) {
          std::cerr << name << ": expected " << expected[name] << ", got " << ok << "\n";
          ++mismatches;
        }
      }
      std::cout << "responses " << responses.size() << "\ncompile_rate " << compile_rate(responses) << "\n";
      if (!labels.empty()) std::cout << "label mismatches " << mismatches << "\n";
      return mismatches ? 1 : 0;
    }
    if (*export_pairs) {
      std::vector<std::string> instructions;
      std::istringstream lines(read_file(prompts_file));
      for (std::string line; std::getline(lines, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) instructions.push_back(line);
      auto retriever = load_retriever(corpus);
      const auto records = export_prompt_meshes(instructions, llm.config(), retriever.get(), k, out);
      std::size_t compiled = 0;
      for (const auto& r : records) compiled += r.compiled ? 1 : 0;
      std::cout << "exported " << compiled << " of " << records.size() << " meshes to " << out << "\n";
      return 0;
    }
    if (*serve) {
      ServiceOptions opts;
      opts.data_dir = data_dir;
      opts.llm = llm.config();
      opts.retriever = load_retriever(corpus);
      EditService service(opts);
      const std::size_t loaded = service.load_sessions();
      HttpServer server(service, host, port, token);
      std::cout << "listening on http://" << host << ":" << server.port() << " (" << loaded << " sessions loaded)"
                << std::endl;
      server.start(threads);
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
      return 0;
    }
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const EvalError& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const LlmError& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
