#include "proc3d/http_server.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <thread>
#include <vector>

namespace proc3d {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

std::vector<std::string_view> split_path(std::string_view target) {
  target = target.substr(0, target.find('?'));
  std::vector<std::string_view> parts;
  while (!target.empty()) {
    if (target.front() == '/') {
      target.remove_prefix(1);
      continue;
    }
    const auto slash = target.find('/');
    parts.push_back(target.substr(0, slash));
    target.remove_prefix(slash == std::string_view::npos ? target.size() : slash);
  }
  return parts;
}

HttpReply json_reply(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

json parse_body(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ServiceError(400, "BadRequest", "body is not valid JSON");
  return j;
}

std::optional<std::string> stream_session(std::string_view target) {
  auto parts = split_path(target);
  if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "stream") return std::string(parts[1]);
  return std::nullopt;
}

}  // namespace

HttpReply route_request(EditService& service, std::string_view method, std::string_view target, std::string_view body) {
  try {
    const auto parts = split_path(target);
    if (method == "GET" && parts.size() == 1 && parts[0] == "health") return json_reply(200, {{"ok", true}});
    if (parts.empty() || parts[0] != "sessions") throw ServiceError(404, "NotFound", "no such resource");

    if (parts.size() == 1) {
      if (method == "POST") return json_reply(201, service.create_session(parse_body(body)).to_json());
      if (method == "GET") return json_reply(200, {{"sessions", service.session_ids()}});
      throw ServiceError(405, "MethodNotAllowed", "use GET or POST");
    }
    const std::string id(parts[1]);
    if (parts.size() == 2) {
      if (method == "GET") return json_reply(200, service.get_state(id).to_json());
      throw ServiceError(405, "MethodNotAllowed", "use GET");
    }
    if (parts.size() == 3 && parts[2] == "params") {
      if (method != "PATCH") throw ServiceError(405, "MethodNotAllowed", "use PATCH");
      json req = parse_body(body);
      if (req.is_object() && req.contains("name")) {
        if (!req["name"].is_string() || !req.contains("value"))
          throw ServiceError(400, "BadRequest", "expected {\"name\": string, \"value\": scalar}");
        return json_reply(200, service.apply_param(id, req["name"].get<std::string>(), req["value"]).to_json());
      }
      if (req.is_object() && req.contains("values")) return json_reply(200, service.apply_params(id, req["values"]).to_json());
      throw ServiceError(400, "BadRequest", "expected {name, value} or {values: {...}}");
    }
    if (parts.size() == 3 && parts[2] == "edits") {
      if (method != "POST") throw ServiceError(405, "MethodNotAllowed", "use POST");
      json req = parse_body(body);
      if (!req.is_object() || !req.contains("instruction") || !req["instruction"].is_string())
        throw ServiceError(400, "BadRequest", "expected {\"instruction\": string}");
      return json_reply(200, service.apply_text_edit(id, req["instruction"].get<std::string>()).to_json());
    }
    if (parts.size() == 3 && parts[2] == "mesh.obj") {
      if (method != "GET") throw ServiceError(405, "MethodNotAllowed", "use GET");
      return {200, "text/plain; charset=utf-8", service.mesh_obj(id)};
    }
    throw ServiceError(404, "NotFound", "no such resource");
  } catch (const ServiceError& e) {
    return json_reply(e.status(), e.to_json());
  } catch (const std::exception& e) {
    return json_reply(500, {{"error", "InternalError"}, {"message", e.what()}});
  }
}

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, EditService& service, std::string id)
      : ws_(std::move(socket)), service_(service), id_(std::move(id)) {}

  ~WsSession() {
    if (mailbox_) service_.unsubscribe(id_, mailbox_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    try {
      mailbox_ = service_.subscribe(id_);
    } catch (const ServiceError&) {
      ws_.async_close(websocket::close_code::policy_error, [self = shared_from_this()](beast::error_code) {});
      return;
    }
    std::weak_ptr<WsSession> weak = shared_from_this();
    mailbox_->set_notify([weak] {
      if (auto self = weak.lock()) net::post(self->ws_.get_executor(), [self] { self->pump(); });
    });
    if (auto current = service_.current_update(id_)) mailbox_->put(current);
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  void pump() {
    if (writing_ || closed_) return;
    current_ = mailbox_->take();
    if (!current_) return;
    writing_ = true;
    control_ = current_->control.dump();
    ws_.text(true);
    ws_.async_write(net::buffer(control_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->fail();
      self->ws_.binary(true);
      self->ws_.async_write(net::buffer(*self->current_->frame), [self](beast::error_code ec2, std::size_t) {
        if (ec2) return self->fail();
        self->writing_ = false;
        self->pump();
      });
    });
  }

  void fail() {
    writing_ = false;
    closed_ = true;
  }

  websocket::stream<beast::tcp_stream> ws_;
  EditService& service_;
  std::string id_;
  std::shared_ptr<Mailbox> mailbox_;
  beast::flat_buffer buffer_;
  std::shared_ptr<const MeshUpdate> current_;
  std::string control_;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, EditService& service, const std::string& token)
      : stream_(std::move(socket)), service_(service), token_(token) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(16 * 1024 * 1024);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  bool authorized(const http::request<http::string_body>& req) const {
    if (token_.empty()) return true;
    auto it = req.find(http::field::authorization);
    return it != req.end() && it->value() == "Bearer " + token_;
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) return close();
    if (ec) return;
    auto req = parser_->release();
    const std::string target(req.target());

    if (websocket::is_upgrade(req)) {
      auto id = stream_session(target);
      if (id && authorized(req)) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), service_, *id)->run(std::move(req));
        return;
      }
    }

    HttpReply reply;
    if (req.method() == http::verb::options) {
      reply = {204, "text/plain", ""};
    } else if (target != "/health" && !authorized(req)) {
      reply = {401, "application/json", json{{"error", "Unauthorized"}, {"message", "missing or wrong bearer token"}}.dump() + "\n"};
    } else {
      reply = route_request(service_, std::string(req.method_string()), target, req.body());
    }

    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status), req.version());
    res->set(http::field::server, "proc3d");
    res->set(http::field::content_type, reply.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_methods, "GET, POST, PATCH, OPTIONS");
    res->set(http::field::access_control_allow_headers, "Content-Type, Authorization");
    res->keep_alive(req.keep_alive());
    res->body() = std::move(reply.body);
    res->prepare_payload();
    res_ = res;
    http::async_write(stream_, *res, [self = shared_from_this(), keep = res->keep_alive()](beast::error_code ec2, std::size_t) {
      self->res_.reset();
      if (ec2) return;
      if (!keep) return self->close();
      self->do_read();
    });
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  std::shared_ptr<void> res_;
  EditService& service_;
  const std::string& token_;
};

}  // namespace

struct HttpServer::Impl {
  EditService& service;
  std::string token;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> threads;

  Impl(EditService& s, const std::string& address, unsigned short port, std::string t)
      : service(s), token(std::move(t)), acceptor(net::make_strand(ioc)) {
    const tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
    do_accept();
  }

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == net::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(socket), service, token)->run();
      do_accept();
    });
  }
};

HttpServer::HttpServer(EditService& service, const std::string& address, unsigned short port, std::string token)
    : impl_(std::make_unique<Impl>(service, address, port, std::move(token))) {}

HttpServer::~HttpServer() { stop(); }

unsigned short HttpServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void HttpServer::start(std::size_t threads) {
  for (std::size_t i = 0; i < std::max<std::size_t>(1, threads); ++i)
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void HttpServer::run() { impl_->ioc.run(); }

void HttpServer::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
  impl_->threads.clear();
}

}  // namespace proc3d
