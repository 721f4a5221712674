#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "proc3d/http_server.hpp"
#include "proc3d/mesh_io.hpp"

using namespace proc3d;
using json = nlohmann::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string read(const std::string& rel) {
  std::ifstream in(std::string(PROC3D_SOURCE_DIR) + "/" + rel, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json body_of(const HttpReply& r) { return json::parse(r.body); }

struct Client {
  unsigned short port;
  std::string token;

  http::response<http::string_body> send(http::verb verb, const std::string& target, const std::string& body = {},
                                         bool with_token = true) const {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "localhost");
    if (with_token && !token.empty()) req.set(http::field::authorization, "Bearer " + token);
    if (!body.empty()) {
      req.set(http::field::content_type, "application/json");
      req.body() = body;
    }
    req.prepare_payload();
    http::write(stream, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return res;
  }
};

class Stream {
 public:
  Stream(unsigned short port, const std::string& path, const std::string& token) : ws_(ioc_) {
    beast::get_lowest_layer(ws_).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws_.set_option(websocket::stream_base::decorator([token](websocket::request_type& req) {
      if (!token.empty()) req.set(http::field::authorization, "Bearer " + token);
    }));
    ws_.handshake("localhost", path);
  }
  ~Stream() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  /// Reads one control message and the binary frame that follows it.
  std::pair<json, Mesh> next() {
    beast::flat_buffer buf;
    ws_.read(buf);
    EXPECT_TRUE(ws_.got_text());
    json control = json::parse(beast::buffers_to_string(buf.data()));
    buf.consume(buf.size());
    ws_.read(buf);
    EXPECT_TRUE(ws_.got_binary());
    const std::string bytes = beast::buffers_to_string(buf.data());
    return {control, decode_mesh_frame(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size())};
  }

 private:
  net::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_;
};

}  // namespace

TEST(Routes, SessionLifecycle) {
  EditService svc;
  const HttpReply created = route_request(svc, "POST", "/sessions", json{{"pcg", read("samples/table.pcg")}}.dump());
  ASSERT_EQ(created.status, 201) << created.body;
  const json c = body_of(created);
  const std::string id = c["session_id"];
  EXPECT_EQ(c["revision"], 0);
  EXPECT_TRUE(c["pcg"].is_string());
  EXPECT_EQ(c["params"].size(), 4u);

  const HttpReply list = route_request(svc, "GET", "/sessions", "");
  EXPECT_EQ(body_of(list)["sessions"], json::array({id}));

  const HttpReply patched = route_request(svc, "PATCH", "/sessions/" + id + "/params", R"({"name": "leg_height", "value": 3})");
  ASSERT_EQ(patched.status, 200) << patched.body;
  EXPECT_EQ(body_of(patched)["revision"], 1);

  const HttpReply batch = route_request(svc, "PATCH", "/sessions/" + id + "/params",
                                        R"({"values": {"leg_radius": 0.4, "table_width": 3.5}})");
  ASSERT_EQ(batch.status, 200) << batch.body;
  const json state = body_of(route_request(svc, "GET", "/sessions/" + id, ""));
  EXPECT_EQ(state["revision"], 2);
  for (const auto& p : state["params"])
    if (p["name"] == "table_width") EXPECT_EQ(p["value"], 3.5);

  const HttpReply obj = route_request(svc, "GET", "/sessions/" + id + "/mesh.obj", "");
  EXPECT_EQ(obj.status, 200);
  EXPECT_EQ(obj.content_type.rfind("text/plain", 0), 0u);
  EXPECT_EQ(obj.body, svc.mesh_obj(id));
  EXPECT_EQ(body_of(route_request(svc, "GET", "/health", ""))["ok"], true);
}

TEST(Routes, ErrorStatusesAndBodies) {
  EditService svc;
  const std::string id = svc.create_from_pcg(read("samples/table.pcg")).session_id;
  auto expect = [&](const char* method, const std::string& target, const std::string& body, int status, const char* code) {
    const HttpReply r = route_request(svc, method, target, body);
    EXPECT_EQ(r.status, status) << method << " " << target << " " << r.body;
    EXPECT_EQ(body_of(r)["error"], code) << r.body;
    return body_of(r);
  };
  expect("POST", "/sessions", "{not json", 400, "BadRequest");
  expect("POST", "/sessions", "{}", 400, "BadRequest");
  const json invalid = expect("POST", "/sessions", json{{"pcg", "a = cube()\nb = bogus(a)\noutput = b\n"}}.dump(), 422, "InvalidGraph");
  EXPECT_EQ(invalid["diagnostics"][0]["line"], 2);
  expect("GET", "/sessions/nope", "", 404, "UnknownSession");
  expect("PATCH", "/sessions/" + id + "/params", R"({"name": "leg_height", "value": 50})", 422, "RangeError");
  expect("PATCH", "/sessions/" + id + "/params", R"({"name": "leg_height", "value": "x"})", 422, "BindingTypeError");
  expect("PATCH", "/sessions/" + id + "/params", R"({"name": "zzz", "value": 1})", 422, "UnknownParameter");
  expect("PATCH", "/sessions/" + id + "/params", R"({"name": "leg_height"})", 400, "BadRequest");
  expect("POST", "/sessions/" + id + "/edits", R"({"text": 1})", 400, "BadRequest");
  expect("DELETE", "/sessions/" + id, "", 405, "MethodNotAllowed");
  expect("GET", "/widgets", "", 404, "NotFound");
  EXPECT_EQ(svc.get_state(id).revision, 0u);
}

TEST(Server, RestOverSocketWithBearerToken) {
  EditService svc;
  HttpServer server(svc, "127.0.0.1", 0, "s3cret");
  server.start(2);
  ASSERT_NE(server.port(), 0);
  const Client client{server.port(), "s3cret"};

  auto denied = client.send(http::verb::post, "/sessions", json{{"pcg", read("samples/table.pcg")}}.dump(), false);
  EXPECT_EQ(denied.result_int(), 401);
  EXPECT_TRUE(svc.session_ids().empty());
  const Client wrong{server.port(), "wrong"};
  EXPECT_EQ(wrong.send(http::verb::get, "/sessions").result_int(), 401);
  EXPECT_EQ(client.send(http::verb::get, "/health", {}, false).result_int(), 200);
  auto preflight = client.send(http::verb::options, "/sessions", {}, false);
  EXPECT_EQ(preflight.result_int(), 204);
  EXPECT_EQ(preflight[http::field::access_control_allow_origin], "*");

  auto created = client.send(http::verb::post, "/sessions", json{{"pcg", read("samples/table.pcg")}}.dump());
  ASSERT_EQ(created.result_int(), 201) << created.body();
  const std::string id = json::parse(created.body())["session_id"];
  auto patched = client.send(http::verb::patch, "/sessions/" + id + "/params", R"({"name": "leg_height", "value": 2.5})");
  EXPECT_EQ(patched.result_int(), 200);
  EXPECT_EQ(json::parse(patched.body())["revision"], 1);
  auto obj = client.send(http::verb::get, "/sessions/" + id + "/mesh.obj");
  EXPECT_EQ(obj.body(), svc.mesh_obj(id));
  server.stop();
}

TEST(Server, StreamSendsControlThenFrame) {
  EditService svc;
  HttpServer server(svc, "127.0.0.1", 0, "tok");
  server.start(2);
  const std::string id = svc.create_from_pcg(read("samples/table.pcg")).session_id;
  Stream ws(server.port(), "/sessions/" + id + "/stream", "tok");

  auto [c0, m0] = ws.next();
  EXPECT_EQ(c0["type"], "revision");
  EXPECT_EQ(c0["revision"], 0);
  EXPECT_EQ(c0["params"].size(), 4u);
  const auto state0 = svc.get_state(id);
  EXPECT_EQ(m0.triangles, state0.mesh->triangles);

  svc.apply_param(id, "leg_height", 3.0);
  auto [c1, m1] = ws.next();
  EXPECT_EQ(c1["revision"], 1);
  // Frame vertices agree with the OBJ endpoint to f32 precision.
  const Mesh from_obj = import_obj(svc.mesh_obj(id));
  ASSERT_EQ(from_obj.vertices.size(), m1.vertices.size());
  for (std::size_t i = 0; i < m1.vertices.size(); ++i)
    for (int k = 0; k < 3; ++k)
      EXPECT_EQ(static_cast<float>(from_obj.vertices[i][k]), static_cast<float>(m1.vertices[i][k]));
  server.stop();
}

TEST(Server, SlowClientSkipsToLatestRevision) {
  EditService svc;
  HttpServer server(svc, "127.0.0.1", 0);
  server.start(2);
  const std::string id = svc.create_from_pcg(read("samples/table.pcg")).session_id;
  Stream ws(server.port(), "/sessions/" + id + "/stream", "");
  for (int i = 1; i <= 200; ++i) svc.apply_param(id, "leg_height", 1.0 + 0.005 * i);
  std::int64_t revision = -1, frames = 0;
  while (revision < 200) {
    auto [control, mesh] = ws.next();
    EXPECT_GT(control["revision"].get<std::int64_t>(), revision);  // never out of order
    revision = control["revision"];
    ++frames;
  }
  EXPECT_EQ(revision, 200);
  EXPECT_LE(frames, 201);
  server.stop();
}

TEST(Server, StreamRequiresTokenAndKnownSession) {
  EditService svc;
  HttpServer server(svc, "127.0.0.1", 0, "tok");
  server.start(1);
  const std::string id = svc.create_from_pcg(read("samples/table.pcg")).session_id;
  EXPECT_THROW(Stream(server.port(), "/sessions/" + id + "/stream", "bad"), boost::system::system_error);
  // Unknown session: the handshake succeeds and the server closes immediately.
  Stream ws(server.port(), "/sessions/missing/stream", "tok");
  EXPECT_THROW(ws.next(), boost::system::system_error);
  server.stop();
}
