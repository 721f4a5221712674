#include <httplib.h>

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proc3d/llm.hpp"

namespace proc3d {

namespace {

std::mutex& store_mutex() {
  static std::mutex m;
  return m;
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Url split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw LlmError(LlmErrorKind::HttpError, "malformed endpoint URL '" + url + "'");
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

std::string live_call(const LlmEndpointConfig& config, std::string_view prompt) {
  const char* token = std::getenv(config.token_env.c_str());
  if (!token || !*token) throw LlmError(LlmErrorKind::AuthError, "environment variable " + config.token_env + " is not set");

  const Url url = split_url(config.base_url);
  httplib::Client cli(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  cli.set_bearer_token_auth(token);

  nlohmann::json body = {{"model", config.model},
                         {"messages", {{{"role", "user"}, {"content", std::string(prompt)}}}},
                         {"max_tokens", config.max_output_tokens},
                         {"temperature", config.temperature}};
  auto res = cli.Post(url.path + "/chat/completions", body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
      throw LlmError(LlmErrorKind::Timeout, "endpoint timed out: " + httplib::to_string(err));
    throw LlmError(LlmErrorKind::HttpError, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403)
    throw LlmError(LlmErrorKind::AuthError, "endpoint rejected credentials", res->status);
  if (res->status < 200 || res->status >= 300)
    throw LlmError(LlmErrorKind::HttpError, "endpoint returned HTTP " + std::to_string(res->status), res->status);

  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
      !j["choices"][0].contains("message") || !j["choices"][0]["message"].contains("content") ||
      !j["choices"][0]["message"]["content"].is_string())
    throw LlmError(LlmErrorKind::HttpError, "unexpected completion payload", res->status);
  return j["choices"][0]["message"]["content"].get<std::string>();
}

}  // namespace

std::string_view to_string(LlmErrorKind kind) {
  switch (kind) {
    case LlmErrorKind::Timeout: return "Timeout";
    case LlmErrorKind::HttpError: return "HttpError";
    case LlmErrorKind::AuthError: return "AuthError";
    case LlmErrorKind::ReplayMiss: return "ReplayMiss";
  }
  return "HttpError";
}

std::string prompt_key(std::string_view prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

void record_response(const std::filesystem::path& replay_dir, std::string_view prompt, std::string_view response) {
  std::lock_guard lock(store_mutex());
  std::filesystem::create_directories(replay_dir);
  const auto path = replay_dir / (prompt_key(prompt) + ".txt");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << response;
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string call_llm(const LlmEndpointConfig& config, std::string_view prompt) {
  if (config.mode == LlmMode::Replay) {
    const auto path = config.replay_dir / (prompt_key(prompt) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LlmError(LlmErrorKind::ReplayMiss, "no recorded response " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string response = live_call(config, prompt);
  if (config.mode == LlmMode::Record) record_response(config.replay_dir, prompt, response);
  return response;
}

}  // namespace proc3d
