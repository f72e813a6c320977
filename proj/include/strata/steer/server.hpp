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

// Steering server: one session behind a WebSocket + HTTP endpoint.
//
//   WebSocket (any path)  JSON messages, see session.hpp; state broadcasts
//                         go to every connected client.
//   GET /model            active model JSON
//   GET /history          per-cycle ring buffer
//   GET /state            current state message
//
// Everything runs on the thread driving the io_context, so the session has
// a single owner and messages are processed in arrival order. A timer
// advances the session by rate * tick each tick and broadcasts every
// `decimation` ticks; one serialized snapshot is shared by all clients.

#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "strata/model_io.hpp"
#include "strata/steer/session.hpp"

namespace strata::steer {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServerConfig {
  std::chrono::milliseconds tick{20};
  std::size_t decimation = 1;  // broadcast every n-th tick
  bool advance = true;         // false: phase only moves on client request (tests)
};

class Server;

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket socket, Server& server) : ws_(std::move(socket)), server_(server) {}

  void start(http::request<http::string_body> req);
  void send(std::shared_ptr<const std::string> text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1 && open_) write_next();
  }
  void close() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

 private:
  void read_next();
  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }
  void drop();

  websocket::stream<tcp::socket> ws_;
  Server& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Server& server) : socket_(std::move(socket)), server_(server) {}
  void start() {
    http::async_read(socket_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->on_request();
    });
  }

 private:
  void on_request();

  tcp::socket socket_;
  Server& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;
};

class Server {
 public:
  /// Binds immediately; throws boost::system::system_error when the port
  /// is taken. Port 0 picks a free port (see port()).
  Server(net::io_context& io, const tcp::endpoint& endpoint, Session session, ServerConfig config = {})
      : io_(io), acceptor_(io), timer_(io), session_(std::move(session)), config_(config) {
    if (config_.decimation == 0) config_.decimation = 1;
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen();
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  Session& session() { return session_; }
  const ModelSpec& model() const { return session_.model(); }

  void start() {
    accept();
    if (config_.advance) schedule_tick();
  }

  void stop() {
    beast::error_code ec;
    acceptor_.close(ec);
    timer_.cancel();
    for (const auto& c : clients_) c->close();
    clients_.clear();
  }

  /// Replies to one client message; state-changing messages are followed by
  /// a broadcast so every client sees the change.
  nlohmann::json on_message(const std::string& text) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      return error_reply("malformed JSON");
    }
    nlohmann::json reply = handle_message(session_, msg);
    if (reply.value("type", "") == "ack") broadcast_state();
    return reply;
  }

  void broadcast_state() {
    const auto text = std::make_shared<const std::string>(session_.state_json().dump());
    for (const auto& c : clients_) c->send(text);
  }

  void add(const std::shared_ptr<WsClient>& c) { clients_.insert(c); }
  void remove(const std::shared_ptr<WsClient>& c) { clients_.erase(c); }
  std::size_t client_count() const { return clients_.size(); }

 private:
  void accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // closed
      std::make_shared<HttpConnection>(std::move(socket), *this)->start();
      accept();
    });
  }

  void schedule_tick() {
    timer_.expires_after(config_.tick);
    timer_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const double seconds = std::chrono::duration<double>(config_.tick).count();
      session_.advance_seconds(seconds);
      if (++ticks_ % config_.decimation == 0) broadcast_state();
      schedule_tick();
    });
  }

  net::io_context& io_;
  tcp::acceptor acceptor_;
  net::steady_timer timer_;
  Session session_;
  ServerConfig config_;
  std::set<std::shared_ptr<WsClient>> clients_;
  std::size_t ticks_ = 0;
};

inline void WsClient::start(http::request<http::string_body> req) {
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->server_.add(self);
    if (!self->queue_.empty()) self->write_next();
    self->read_next();
  });
}

inline void WsClient::read_next() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) return self->drop();
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    self->send(std::make_shared<const std::string>(self->server_.on_message(text).dump()));
    self->read_next();
  });
}

inline void WsClient::drop() {
  open_ = false;
  server_.remove(shared_from_this());
}

inline void HttpConnection::on_request() {
  if (websocket::is_upgrade(req_)) {
    std::make_shared<WsClient>(std::move(socket_), server_)->start(std::move(req_));
    return;
  }
  res_ = std::make_shared<http::response<http::string_body>>();
  res_->version(req_.version());
  res_->keep_alive(false);
  const std::string target(req_.target());
  if (req_.method() != http::verb::get) {
    res_->result(http::status::method_not_allowed);
    res_->body() = error_reply("only GET is supported").dump();
  } else if (target == "/model") {
    res_->result(http::status::ok);
    res_->body() = to_json(server_.model()).dump();
  } else if (target == "/history") {
    res_->result(http::status::ok);
    res_->body() = server_.session().history_json().dump();
  } else if (target == "/state") {
    res_->result(http::status::ok);
    res_->body() = server_.session().state_json().dump();
  } else {
    res_->result(http::status::not_found);
    res_->body() = error_reply("no such resource '" + target + "'").dump();
  }
  res_->set(http::field::content_type, "application/json");
  res_->set(http::field::access_control_allow_origin, "*");
  res_->prepare_payload();
  http::async_write(socket_, *res_, [self = shared_from_this()](beast::error_code, std::size_t) {
    beast::error_code ec;
    self->socket_.shutdown(tcp::socket::shutdown_send, ec);
  });
}

}  // namespace strata::steer
