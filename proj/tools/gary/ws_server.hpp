#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "gary/harness.hpp"
#include "gary/service.hpp"

namespace gary::tools {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  std::size_t max_sessions = 8;
  ServiceOptions service;
};

/// Websocket transport for SessionService: one text frame per JSON message,
/// one engine session per connection, all sessions on a single io_context.
class WsServer {
 public:
  WsServer(Material text, ServerOptions opts);
  ~WsServer();

  /// Binds and starts accepting; returns the bound port.
  unsigned short listen();
  /// Runs the event loop until stop().
  void run();
  /// Thread-safe.
  void stop();

  std::size_t active_sessions() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gary::tools
