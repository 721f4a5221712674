#include "proc3d/service.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "proc3d/json_io.hpp"
#include "proc3d/mesh_io.hpp"

namespace proc3d {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string new_session_id() {
  static std::mutex m;
  static std::random_device rd;
  static std::mt19937_64 rng(rd());
  std::lock_guard lock(m);
  static constexpr char hex[] = "0123456789abcdef";
  std::string id;
  for (int w = 0; w < 2; ++w) {
    std::uint64_t x = rng();
    for (int i = 0; i < 16; ++i, x >>= 4) id += hex[x & 0xf];
  }
  return id;
}

bool valid_session_id(std::string_view id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

json value_json(const Value& v) { return value_to_json(v); }

Graph parse_or_throw(std::string_view pcg, int status = 422) {
  auto r = parse_pcg(pcg);
  if (!r.ok()) {
    throw ServiceError(status, "InvalidGraph", "graph does not compile",
                       {{"diagnostics", diagnostics_to_json(r.diagnostics)}});
  }
  return std::move(*r.graph);
}

ServiceError eval_failure(const EvalError& e) {
  json details = {{"error", std::string(to_string(e.code()))}};
  if (!e.node().empty()) details["node"] = e.node();
  return ServiceError(422, std::string(to_string(e.code())), e.what(), details);
}

std::unique_ptr<EvalSession> make_eval(Graph graph, const Bindings& bindings = {}) {
  try {
    return std::make_unique<EvalSession>(std::move(graph), bindings);
  } catch (const EvalError& e) {
    throw eval_failure(e);
  }
}

Bindings bindings_from_json(const Graph& g, const json& values) {
  if (!values.is_object()) throw ServiceError(400, "BadRequest", "expected an object of parameter values");
  Bindings delta;
  for (const auto& [name, v] : values.items()) {
    const ParamSpec* p = g.find_param(name);
    if (!p) throw ServiceError(422, "UnknownParameter", "unknown parameter '" + name + "'");
    delta.emplace(name, value_from_json(v, *p));
  }
  return delta;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

json ServiceError::to_json() const {
  json j = {{"error", code_}, {"message", what()}};
  for (const auto& [k, v] : details_.items()) j[k] = v;
  return j;
}

json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
  json out = json::array();
  for (const auto& d : diagnostics)
    out.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"},
                   {"line", d.line},
                   {"code", d.code},
                   {"message", d.message}});
  return out;
}

Value value_from_json(const json& j, const ParamSpec& param) {
  auto mismatch = [&] {
    return ServiceError(422, "BindingTypeError",
                        "parameter '" + param.name + "' expects " + std::string(to_string(param.type)));
  };
  switch (param.type) {
    case ValueType::Float:
      if (!j.is_number()) throw mismatch();
      return Value(j.get<double>());
    case ValueType::Int:
      if (j.is_number_integer()) return Value(j.get<std::int64_t>());
      if (j.is_number_float()) {
        const double d = j.get<double>();
        if (d == std::floor(d) && std::abs(d) < 9.0e15) return Value(static_cast<std::int64_t>(d));
      }
      throw mismatch();
    case ValueType::Bool:
      if (!j.is_boolean()) throw mismatch();
      return Value(j.get<bool>());
    default: throw mismatch();
  }
}

Bindings carry_over_bindings(const Graph& old_graph, const Bindings& current, const Graph& new_graph) {
  Bindings out;
  for (const auto& p : new_graph.params) {
    const ParamSpec* old = old_graph.find_param(p.name);
    auto cur = current.find(p.name);
    if (!old || old->type != p.type || !(old->default_value == p.default_value) || cur == current.end()) continue;
    try {
      out.emplace(p.name, coerce_binding(p, cur->second));
    } catch (const EvalError&) {
      // outside the new range: fall back to the default
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Mailbox

void Mailbox::put(std::shared_ptr<const MeshUpdate> update) {
  std::function<void()> notify;
  {
    std::lock_guard lock(mutex_);
    if (pending_) ++dropped_;
    pending_ = std::move(update);
    notify = notify_;
  }
  cv_.notify_all();
  if (notify) notify();
}

std::shared_ptr<const MeshUpdate> Mailbox::take() {
  std::lock_guard lock(mutex_);
  return std::exchange(pending_, nullptr);
}

std::shared_ptr<const MeshUpdate> Mailbox::wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return pending_ != nullptr; });
  return std::exchange(pending_, nullptr);
}

void Mailbox::set_notify(std::function<void()> notify) {
  std::lock_guard lock(mutex_);
  notify_ = std::move(notify);
}

std::size_t Mailbox::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

// ---------------------------------------------------------------------------------------------
// Sessions

json SessionState::to_json() const {
  return {{"session_id", session_id}, {"revision", revision}, {"pcg", pcg}, {"params", params}};
}

struct EditService::Session {
  std::string id;
  mutable std::mutex mutex;
  std::unique_ptr<EvalSession> eval;
  std::uint64_t revision = 0;
  std::vector<json> history;
  std::int64_t created_ms = 0;
  std::int64_t updated_ms = 0;
  std::vector<std::shared_ptr<Mailbox>> subscribers;
  std::shared_ptr<const MeshUpdate> latest;
};

EditService::EditService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.data_dir.empty()) std::filesystem::create_directories(options_.data_dir);
}

EditService::~EditService() = default;

std::shared_ptr<EditService::Session> EditService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "UnknownSession", "no session '" + id + "'");
  return it->second;
}

namespace {

json params_json(const EvalSession& eval) {
  json out = json::array();
  for (const auto& p : eval.graph().params) {
    json j = {{"name", p.name},
              {"type", std::string(to_string(p.type))},
              {"default", value_json(p.default_value)},
              {"value", value_json(eval.binding(p.name))}};
    if (p.range) j["range"] = {p.range->first, p.range->second};
    out.push_back(std::move(j));
  }
  return out;
}

std::shared_ptr<const MeshUpdate> make_update(const EvalSession& eval, std::uint64_t revision) {
  auto u = std::make_shared<MeshUpdate>();
  u->revision = revision;
  json values = json::object();
  for (const auto& p : eval.graph().params) values[p.name] = value_json(eval.binding(p.name));
  u->control = {{"type", "revision"}, {"revision", revision}, {"params", values}};
  u->frame = std::make_shared<const std::vector<std::uint8_t>>(encode_mesh_frame(*eval.mesh()));
  return u;
}

void append_event(const std::filesystem::path& dir, const std::string& id, const json& event) {
  if (dir.empty()) return;
  std::ofstream f(dir / (id + ".jsonl"), std::ios::binary | std::ios::app);
  f << event.dump() << '\n';
  f.flush();
  if (!f) throw ServiceError(500, "PersistenceError", "cannot append to the session log");
}

}  // namespace

SessionState EditService::snapshot(const Session& s) const {
  SessionState st;
  st.session_id = s.id;
  st.revision = s.revision;
  st.pcg = print_pcg(s.eval->graph());
  st.params = params_json(*s.eval);
  st.mesh = s.eval->mesh();
  return st;
}

/// Persists the event, then publishes the session's current state. Caller holds s.mutex and
/// has already installed the new evaluation state.
void EditService::commit(Session& s, json event) {
  s.history.push_back(std::move(event));
  s.updated_ms = now_ms();
  s.latest = make_update(*s.eval, s.revision);
  for (const auto& m : s.subscribers) m->put(s.latest);
}

SessionState EditService::install(std::unique_ptr<EvalSession> eval, json event) {
  auto s = std::make_shared<Session>();
  s->id = new_session_id();
  s->created_ms = now_ms();
  append_event(options_.data_dir, s->id, event);
  s->eval = std::move(eval);
  std::lock_guard lock(s->mutex);
  commit(*s, std::move(event));
  {
    std::unique_lock map_lock(sessions_mutex_);
    sessions_.emplace(s->id, s);
  }
  return snapshot(*s);
}

SessionState EditService::create_session(const json& request) {
  if (!request.is_object()) throw ServiceError(400, "BadRequest", "expected a JSON object");
  if (request.contains("pcg") && request["pcg"].is_string()) return create_from_pcg(request["pcg"].get<std::string>());
  if (request.contains("instruction") && request["instruction"].is_string())
    return create_from_instruction(request["instruction"].get<std::string>());
  throw ServiceError(400, "BadRequest", "body needs a string 'pcg' or 'instruction'");
}

SessionState EditService::create_from_pcg(std::string_view pcg) {
  Graph g = parse_or_throw(pcg);
  auto eval = make_eval(g);
  return install(std::move(eval), {{"type", "create"}, {"ts", now_ms()}, {"pcg", print_pcg(g)}});
}

std::string EditService::generate_pcg(std::string_view instruction, json& details) {
  std::vector<InstructionGraphPair> examples;
  if (options_.retriever) examples = options_.retriever->retrieve(instruction, options_.examples);
  const Prompt prompt = build_generation_prompt(instruction, examples);
  try {
    return call_llm(options_.llm, prompt.text);
  } catch (const LlmError& e) {
    details = {{"llm_error", std::string(to_string(e.kind()))}, {"prompt_key", prompt_key(prompt.text)}};
    throw ServiceError(502, std::string(to_string(e.kind())), e.what(), details);
  }
}

SessionState EditService::create_from_instruction(std::string_view instruction) {
  if (instruction.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ServiceError(400, "ValidationError", "instruction must not be empty");
  json details;
  const std::string raw = generate_pcg(instruction, details);
  auto extracted = extract_graph(raw);
  if (!extracted.ok())
    throw ServiceError(422, "GenerationFailed", "model output does not compile",
                       {{"diagnostics", diagnostics_to_json(extracted.parse.diagnostics)}, {"raw_response", raw}});
  Graph g = std::move(*extracted.parse.graph);
  std::unique_ptr<EvalSession> eval;
  try {
    eval = std::make_unique<EvalSession>(g);
  } catch (const EvalError& e) {
    auto err = eval_failure(e);
    json d = err.details();
    d["raw_response"] = raw;
    throw ServiceError(422, err.code(), err.what(), d);
  }
  return install(std::move(eval), {{"type", "create"},
                                   {"ts", now_ms()},
                                   {"instruction", std::string(instruction)},
                                   {"pcg", print_pcg(g)}});
}

SessionState EditService::apply_param(const std::string& id, const std::string& name, const json& value) {
  return apply_params(id, json{{name, value}});
}

SessionState EditService::apply_params(const std::string& id, const json& values) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const Bindings delta = bindings_from_json(s->eval->graph(), values);
  auto next = std::make_unique<EvalSession>(*s->eval);
  try {
    next->reevaluate(delta);
  } catch (const EvalError& e) {
    throw eval_failure(e);
  }
  json event = {{"type", "param"}, {"ts", now_ms()}, {"values", values}};
  append_event(options_.data_dir, s->id, event);
  s->eval = std::move(next);
  ++s->revision;
  commit(*s, std::move(event));
  return snapshot(*s);
}

SessionState EditService::apply_text_edit(const std::string& id, std::string_view instruction) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  Prompt prompt;
  try {
    prompt = build_edit_prompt(s->eval->graph(), instruction);
  } catch (const ValidationError& e) {
    throw ServiceError(400, "ValidationError", e.what());
  }
  std::string raw;
  try {
    raw = call_llm(options_.llm, prompt.text);
  } catch (const LlmError& e) {
    throw ServiceError(502, std::string(to_string(e.kind())), e.what(),
                       {{"llm_error", std::string(to_string(e.kind()))}, {"prompt_key", prompt_key(prompt.text)}});
  }
  auto extracted = extract_graph(raw);
  if (!extracted.ok()) {
    const bool none = !extracted.parse.diagnostics.empty() && extracted.parse.diagnostics.front().code == diag::kNoGraphFound;
    throw ServiceError(422, none ? diag::kNoGraphFound : "InvalidGraph", "model output does not compile",
                       {{"diagnostics", diagnostics_to_json(extracted.parse.diagnostics)}, {"raw_response", raw}});
  }
  Graph g = std::move(*extracted.parse.graph);
  const Bindings carried = carry_over_bindings(s->eval->graph(), s->eval->bindings(), g);
  std::unique_ptr<EvalSession> next;
  try {
    next = std::make_unique<EvalSession>(g, carried);
  } catch (const EvalError& e) {
    auto err = eval_failure(e);
    json d = err.details();
    d["raw_response"] = raw;
    throw ServiceError(422, err.code(), err.what(), d);
  }
  json event = {{"type", "text_edit"}, {"ts", now_ms()}, {"instruction", std::string(instruction)}, {"pcg", print_pcg(g)}};
  append_event(options_.data_dir, s->id, event);
  s->eval = std::move(next);
  ++s->revision;
  commit(*s, std::move(event));
  return snapshot(*s);
}

SessionState EditService::get_state(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return snapshot(*s);
}

std::string EditService::mesh_obj(const std::string& id) const {
  auto s = find(id);
  MeshPtr mesh;
  {
    std::lock_guard lock(s->mutex);
    mesh = s->eval->mesh();
  }
  return export_obj(*mesh);
}

std::vector<std::string> EditService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

std::shared_ptr<Mailbox> EditService::subscribe(const std::string& id) {
  auto s = find(id);
  auto m = std::make_shared<Mailbox>();
  std::lock_guard lock(s->mutex);
  s->subscribers.push_back(m);
  return m;
}

void EditService::unsubscribe(const std::string& id, const std::shared_ptr<Mailbox>& mailbox) {
  std::shared_ptr<Session> s;
  try {
    s = find(id);
  } catch (const ServiceError&) {
    return;
  }
  std::lock_guard lock(s->mutex);
  std::erase(s->subscribers, mailbox);
}

std::shared_ptr<const MeshUpdate> EditService::current_update(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->latest;
}

std::size_t EditService::load_sessions() {
  if (options_.data_dir.empty() || !std::filesystem::exists(options_.data_dir)) return 0;
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());

  std::size_t loaded = 0;
  for (const auto& path : logs) {
    const std::string id = path.stem().string();
    try {
      if (!valid_session_id(id)) throw std::runtime_error("invalid session id");
      std::ifstream in(path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string text = ss.str();
      if (text.empty() || text.back() != '\n') throw std::runtime_error("log is truncated");

      auto s = std::make_shared<Session>();
      s->id = id;
      std::istringstream lines(text);
      std::string line;
      while (std::getline(lines, line)) {
        json event = json::parse(line);
        const std::string type = event.at("type").get<std::string>();
        if (!s->eval) {
          if (type != "create") throw std::runtime_error("log does not start with a create event");
          s->eval = make_eval(parse_or_throw(event.at("pcg").get<std::string>()));
          s->created_ms = event.value("ts", std::int64_t{0});
        } else if (type == "param") {
          s->eval->reevaluate(bindings_from_json(s->eval->graph(), event.at("values")));
          ++s->revision;
        } else if (type == "text_edit") {
          Graph g = parse_or_throw(event.at("pcg").get<std::string>());
          const Bindings carried = carry_over_bindings(s->eval->graph(), s->eval->bindings(), g);
          s->eval = make_eval(std::move(g), carried);
          ++s->revision;
        } else {
          throw std::runtime_error("unexpected event '" + type + "'");
        }
        s->updated_ms = event.value("ts", std::int64_t{0});
        s->history.push_back(std::move(event));
      }
      if (!s->eval) throw std::runtime_error("log is empty");
      s->latest = make_update(*s->eval, s->revision);
      std::unique_lock lock(sessions_mutex_);
      sessions_[id] = s;
      ++loaded;
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping session log " << path.string() << ": " << e.what() << "\n";
    }
  }
  return loaded;
}

}  // namespace proc3d
