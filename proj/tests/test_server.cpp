// Copyright 2026 The Strata Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Steering server over real sockets: WebSocket protocol, broadcasts to
// several clients, HTTP endpoints and bind failures.

#include <chrono>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "strata/model_io.hpp"
#include "strata/steer/server.hpp"

namespace strata::steer {
namespace {

const std::string kData = STRATA_DATA_DIR;

// Runs a server on its own io_context thread.
class ServerFixture : public ::testing::Test {
 protected:
  void start(ServerConfig cfg) {
    const ModelSpec q = load_model(kData + "/quad.json");
    SessionConfig sc;
    sc.gait.step = std::numbers::pi / 400;
    server_ = std::make_unique<Server>(io_, tcp::endpoint(net::ip::make_address("127.0.0.1"), 0),
                                       Session(q, fiducial_trot(q), sc), cfg);
    server_->start();
    thread_ = std::thread([this] { io_.run(); });
  }
  void TearDown() override {
    if (server_) net::post(io_, [this] {
        server_->stop();
        io_.stop();
      });
    if (thread_.joinable()) thread_.join();
  }
  unsigned short port() const { return server_->port(); }

  net::io_context io_;
  std::unique_ptr<Server> server_;
  std::thread thread_;
};

class WsTestClient {
 public:
  explicit WsTestClient(unsigned short port) : ws_(io_) {
    tcp::resolver r(io_);
    net::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  void send(const nlohmann::json& j) { ws_.write(net::buffer(j.dump())); }
  void send_raw(const std::string& s) { ws_.write(net::buffer(s)); }
  nlohmann::json read() {
    beast::flat_buffer b;
    ws_.read(b);
    return nlohmann::json::parse(beast::buffers_to_string(b.data()));
  }
  // Reads until a message of the given type arrives.
  nlohmann::json read_type(const std::string& type) {
    for (int k = 0; k < 1000; ++k) {
      nlohmann::json j = read();
      if (j.value("type", "") == type) return j;
    }
    throw std::runtime_error("no '" + type + "' message");
  }

 private:
  net::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

std::pair<int, std::string> http_get(unsigned short port, const std::string& target) {
  net::io_context io;
  tcp::socket sock(io);
  tcp::resolver r(io);
  net::connect(sock, r.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  beast::flat_buffer b;
  http::response<http::string_body> res;
  http::read(sock, b, res);
  return {static_cast<int>(res.result_int()), res.body()};
}

TEST_F(ServerFixture, ProtocolRoundTrip) {
  ServerConfig cfg;
  cfg.advance = false;
  start(cfg);
  WsTestClient c(port());
  c.send({{"type", "snapshot"}});
  nlohmann::json st = c.read_type("state");
  EXPECT_EQ(st["tau"], 0.0);
  EXPECT_EQ(st["cycle"], 0);
  c.send({{"type", "set_inputs"}, {"u13", {0.5, 0.25}}, {"u24", {0.5, -0.25}}});
  EXPECT_EQ(c.read_type("ack")["request"], "set_inputs");
  c.send({{"type", "snapshot"}});
  st = c.read_type("state");
  EXPECT_EQ(st["pending"]["u13"], nlohmann::json({0.5, 0.25}));
  EXPECT_EQ(st["latched"]["u13"], nlohmann::json({1.0, 0.0}));
  c.send_raw("{not json");
  EXPECT_EQ(c.read_type("error")["message"], "malformed JSON");
  c.send({{"type", "warp"}});
  EXPECT_EQ(c.read_type("error")["type"], "error");
}

TEST_F(ServerFixture, BroadcastsReachEveryClient) {
  ServerConfig cfg;
  cfg.advance = false;
  start(cfg);
  WsTestClient a(port()), b(port());
  // Make sure both are registered before the broadcast.
  a.send({{"type", "snapshot"}});
  a.read_type("state");
  b.send({{"type", "snapshot"}});
  b.read_type("state");
  a.send({{"type", "set_rate"}, {"phase_per_sec", 1.5}});
  // a: broadcast then ack (in send order); b: broadcast only.
  const nlohmann::json sa = a.read_type("state");
  const nlohmann::json sb = b.read_type("state");
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa["rate"], 1.5);
}

TEST_F(ServerFixture, TimerAdvancesAndStreams) {
  ServerConfig cfg;
  cfg.tick = std::chrono::milliseconds(5);
  cfg.decimation = 2;
  start(cfg);
  WsTestClient a(port()), b(port());
  nlohmann::json first = a.read_type("state");
  nlohmann::json later;
  for (int k = 0; k < 20; ++k) later = a.read_type("state");
  EXPECT_GT(later["tau"].get<double>(), first["tau"].get<double>());
  // The second client sees the same stream (identical snapshots by tau).
  nlohmann::json sb = b.read_type("state");
  while (sb["tau"].get<double>() < later["tau"].get<double>()) sb = b.read_type("state");
  EXPECT_EQ(sb, later);
}

TEST_F(ServerFixture, HttpEndpoints) {
  ServerConfig cfg;
  cfg.advance = false;
  start(cfg);
  auto [code, body] = http_get(port(), "/model");
  EXPECT_EQ(code, 200);
  EXPECT_EQ(nlohmann::json::parse(body), to_json(load_model(kData + "/quad.json")));
  std::tie(code, body) = http_get(port(), "/history");
  EXPECT_EQ(code, 200);
  EXPECT_TRUE(nlohmann::json::parse(body)["cycles"].empty());
  std::tie(code, body) = http_get(port(), "/state");
  EXPECT_EQ(code, 200);
  EXPECT_EQ(nlohmann::json::parse(body)["type"], "state");
  std::tie(code, body) = http_get(port(), "/nope");
  EXPECT_EQ(code, 404);
}

TEST_F(ServerFixture, HistoryFillsAsCyclesComplete) {
  ServerConfig cfg;
  cfg.tick = std::chrono::milliseconds(2);
  start(cfg);
  WsTestClient c(port());
  c.send({{"type", "set_rate"}, {"phase_per_sec", 600.0}});  // ~ one cycle per tick pair
  nlohmann::json st;
  do st = c.read_type("state");
  while (st["cycle"].get<int>() < 2);
  const auto [code, body] = http_get(port(), "/history");
  ASSERT_EQ(code, 200);
  const nlohmann::json h = nlohmann::json::parse(body);
  ASSERT_GE(h["cycles"].size(), 2u);
  EXPECT_GT(h["cycles"][0]["z"][1].get<double>(), 0.0);
  EXPECT_TRUE(h["cycles"][0]["turning_radius"].is_null());
}

TEST(Server, PortInUseFailsToBind) {
  const ModelSpec q = load_model(kData + "/quad.json");
  net::io_context io;
  Server first(io, tcp::endpoint(net::ip::make_address("127.0.0.1"), 0), Session(q, fiducial_trot(q)));
  EXPECT_THROW(Server(io, tcp::endpoint(net::ip::make_address("127.0.0.1"), first.port()), Session(q, fiducial_trot(q))),
               boost::system::system_error);
}

}  // namespace
}  // namespace strata::steer
