#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proc3d/evaluator.hpp"
#include "proc3d/llm.hpp"

namespace proc3d {

/// Failure surfaced to a client: an HTTP status, a stable code and optional details
/// (diagnostics, raw model output).
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message, nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& details() const { return details_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  nlohmann::json details_;
};

nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);
/// Converts a JSON scalar to the parameter's type. Throws ServiceError (422, BindingTypeError).
Value value_from_json(const nlohmann::json& j, const ParamSpec& param);

/// One mesh revision as pushed to subscribers.
struct MeshUpdate {
  std::uint64_t revision = 0;
  nlohmann::json control;  ///< {"type":"revision","revision","params"}
  std::shared_ptr<const std::vector<std::uint8_t>> frame;
};

/// Latest-wins slot for one subscriber. A slow reader skips intermediate revisions but the
/// most recent one is always retained until taken.
class Mailbox {
 public:
  void put(std::shared_ptr<const MeshUpdate> update);
  std::shared_ptr<const MeshUpdate> take();
  /// Blocks until an update is pending or the timeout passes.
  std::shared_ptr<const MeshUpdate> wait(std::chrono::milliseconds timeout);
  /// Called (outside the lock) after every put.
  void set_notify(std::function<void()> notify);
  std::size_t dropped() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<const MeshUpdate> pending_;
  std::function<void()> notify_;
  std::size_t dropped_ = 0;
};

struct SessionState {
  std::string session_id;
  std::uint64_t revision = 0;
  std::string pcg;
  nlohmann::json params;  ///< [{name,type,default,range?,value}]
  MeshPtr mesh;
  nlohmann::json to_json() const;
};

/// Binding carry-over for a replaced graph: a current value survives when the new graph declares
/// a parameter of the same name and type with an unchanged default, and the value lies in the
/// new range. Every other parameter starts at its new default.
Bindings carry_over_bindings(const Graph& old_graph, const Bindings& current, const Graph& new_graph);

struct ServiceOptions {
  std::filesystem::path data_dir;  ///< Empty disables persistence.
  LlmEndpointConfig llm;
  std::shared_ptr<const ExampleRetriever> retriever;  ///< Optional demonstrations for generation.
  std::size_t examples = 20;
};

/// Hosts editing sessions. Sessions are independent; mutations of one session are serialized.
/// Every successful mutation bumps the revision by one, is appended to the session's event log
/// and is pushed to subscribers. A failed mutation changes nothing.
class EditService {
 public:
  explicit EditService(ServiceOptions options = {});
  ~EditService();
  EditService(const EditService&) = delete;
  EditService& operator=(const EditService&) = delete;

  /// Body {"pcg": text} or {"instruction": text}.
  SessionState create_session(const nlohmann::json& request);
  SessionState create_from_pcg(std::string_view pcg);
  SessionState create_from_instruction(std::string_view instruction);

  SessionState apply_param(const std::string& id, const std::string& name, const nlohmann::json& value);
  SessionState apply_params(const std::string& id, const nlohmann::json& values);
  SessionState apply_text_edit(const std::string& id, std::string_view instruction);
  SessionState get_state(const std::string& id) const;
  std::string mesh_obj(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  std::shared_ptr<Mailbox> subscribe(const std::string& id);
  void unsubscribe(const std::string& id, const std::shared_ptr<Mailbox>& mailbox);
  /// Current revision in update form, used to prime a new subscriber.
  std::shared_ptr<const MeshUpdate> current_update(const std::string& id) const;

  /// Replays every event log under data_dir. Corrupt logs are skipped with a warning.
  /// Returns the number of sessions loaded.
  std::size_t load_sessions();

  const ServiceOptions& options() const { return options_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string generate_pcg(std::string_view instruction, nlohmann::json& failure_details);
  SessionState snapshot(const Session& s) const;
  void commit(Session& s, nlohmann::json event);
  SessionState install(std::unique_ptr<EvalSession> eval, nlohmann::json event);

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace proc3d
