#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "meetflow/clock.hpp"
#include "meetflow/genai_gateway.hpp"
#include "meetflow/session.hpp"

namespace meetflow {

struct ServerConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "data";
  ProviderConfig provider;
  SessionConfig session;
  Millis tick_interval{200};
};

// Relative paths in the file resolve against the file's directory.
ServerConfig parse_server_config(const Json& doc, const std::filesystem::path& base_dir = {});
ServerConfig load_server_config(const std::filesystem::path& path);

// Websocket front end for a SessionHub. One text frame per WireMessage.
class WsServer {
 public:
  WsServer(ServerConfig config, std::shared_ptr<Gateway> gateway, const Clock& clock);
  ~WsServer();

  // Binds and starts serving on background threads; returns the bound port.
  // Throws Error(ConfigError) when the address cannot be bound.
  unsigned short start();
  void stop();
  // Blocks until stop() or SIGINT/SIGTERM.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace meetflow
