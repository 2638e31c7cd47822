#include "meetflow/ws_server.hpp"

#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "meetflow/sync_server.hpp"

namespace meetflow {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

ServerConfig parse_server_config(const Json& doc, const std::filesystem::path& base_dir) {
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path = p;
    return path.is_absolute() || base_dir.empty() ? path : (base_dir / path).lexically_normal();
  };
  try {
    ServerConfig c;
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.data_dir = resolve(doc.value("data_dir", c.data_dir.string()));
    c.tick_interval = Millis{doc.value("tick_interval_ms", c.tick_interval.count())};
    if (const auto it = doc.find("provider"); it != doc.end()) {
      const Json& p = *it;
      c.provider.mode = parse_provider_mode(p.value("mode", std::string(to_string(c.provider.mode))));
      c.provider.endpoint_url = p.value("endpoint_url", c.provider.endpoint_url);
      c.provider.model_name = p.value("model", c.provider.model_name);
      c.provider.api_key_env_var = p.value("api_key_env", c.provider.api_key_env_var);
      if (p.contains("fixture_dir")) c.provider.fixture_dir = resolve(p.at("fixture_dir").get<std::string>());
      if (p.contains("temperature") && !p.at("temperature").is_null()) {
        c.provider.temperature = p.at("temperature").get<double>();
      }
      c.provider.transport_retries = p.value("transport_retries", c.provider.transport_retries);
      c.provider.timeout_seconds = p.value("timeout_seconds", c.provider.timeout_seconds);
    }
    if (const auto it = doc.find("session"); it != doc.end()) c.session = it->get<SessionConfig>();
    if (c.tick_interval <= Millis::zero()) throw Error(ErrorCode::ConfigError, "tick_interval_ms must be positive");
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }
}

ServerConfig load_server_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const Json doc = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ConfigError, path.string() + " is not a JSON object");
  return parse_server_config(doc, path.parent_path());
}

namespace {

class Connection;

// Which connection speaks for which participant of which session.
class Registry {
 public:
  void bind(const std::shared_ptr<Connection>& c, const std::string& session, const ParticipantId& participant);
  void unbind(const Connection* c);
  void deliver(const std::string& session, const Outbound& out);

 private:
  struct Binding {
    std::weak_ptr<Connection> connection;
    std::string session;
    ParticipantId participant;
  };
  std::mutex mutex_;
  std::map<const Connection*, Binding> bindings_;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionHub& hub, Registry& registry, asio::thread_pool& workers)
      : ws_(std::move(socket)), hub_(hub), registry_(registry), commands_(asio::make_strand(workers)) {}

  void run() {
    asio::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

  void send(std::string text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back(std::move(text));
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  void send(const WireMessage& m) { send(canonical_dump(wire_json(m))); }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

  // Set once a join succeeds; touched only from the worker path.
  std::optional<std::pair<std::string, ParticipantId>> identity;
  std::mutex identity_mutex;

 private:
  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read_next();
    });
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->registry_.unbind(self.get());
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      // Commands may call the model, so they run off the network thread, still
      // in arrival order for this connection.
      asio::post(self->commands_, [self, text = std::move(text)] { self->handle(text); });
      self->read_next();
    });
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->queue_.clear();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }

  void handle(const std::string& text);

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  SessionHub& hub_;
  Registry& registry_;
  asio::strand<asio::thread_pool::executor_type> commands_;
};

void Registry::bind(const std::shared_ptr<Connection>& c, const std::string& session, const ParticipantId& participant) {
  std::lock_guard lock(mutex_);
  bindings_[c.get()] = Binding{c, session, participant};
}

void Registry::unbind(const Connection* c) {
  std::lock_guard lock(mutex_);
  bindings_.erase(c);
}

void Registry::deliver(const std::string& session, const Outbound& out) {
  std::lock_guard lock(mutex_);
  for (const auto& [key, b] : bindings_) {
    if (b.session != session || !out.delivers_to(b.participant)) continue;
    if (auto c = b.connection.lock()) c->send(out.message);
  }
}

void Connection::handle(const std::string& text) {
  WireMessage m;
  try {
    m = parse_wire_message(text);
  } catch (const Error& e) {
    send(error_message({}, e.code(), e.what()));
    return;
  }

  if (m.type == "create_session") {
    try {
      const Invitation invitation = m.payload.at("invitation").get<Invitation>();
      std::optional<SessionConfig> config;
      if (m.payload.contains("config")) config = m.payload.at("config").get<SessionConfig>();
      const std::string id = hub_.create_session(invitation, config);
      for (const auto& e : hub_.event_log(id)) send(event_message(id, e, std::nullopt));
    } catch (const Error& e) {
      send(error_message({}, e.code(), e.what()));
    } catch (const std::exception& e) {
      send(error_message({}, ErrorCode::ProtocolError, e.what()));
    }
    return;
  }

  std::lock_guard lock(identity_mutex);
  ParticipantId participant;
  bool fresh_join = false;
  if (m.type == "join") {
    const auto it = m.payload.find("participant_id");
    if (it == m.payload.end() || !it->is_string() || it->get<std::string>().empty()) {
      send(error_message(m.session_id, ErrorCode::ProtocolError, "join needs a participant_id"));
      return;
    }
    participant = it->get<std::string>();
    if (identity && *identity != std::pair{m.session_id, participant}) {
      send(error_message(m.session_id, ErrorCode::ProtocolError, "this connection already joined as another member"));
      return;
    }
    fresh_join = !identity;
    registry_.bind(shared_from_this(), m.session_id, participant);
  } else {
    if (!identity || identity->first != m.session_id) {
      send(error_message(m.session_id, ErrorCode::ProtocolError, "join the session before sending commands"));
      return;
    }
    participant = identity->second;
  }

  bool rejected = false;
  hub_.handle_command(m.session_id, participant, m, [&](const Outbound& out) {
    if (out.message.type == "error") {
      rejected = true;
      send(out.message);
      return;
    }
    registry_.deliver(m.session_id, out);
  });
  if (m.type == "join") {
    if (rejected && fresh_join) {
      registry_.unbind(this);
    } else if (!rejected) {
      identity = std::pair{m.session_id, participant};
    }
  }
}

}  // namespace

struct WsServer::Impl {
  ServerConfig config;
  SessionHub hub;
  asio::io_context ioc;
  asio::thread_pool workers{2};
  tcp::acceptor acceptor{ioc};
  asio::steady_timer ticker{ioc};
  asio::signal_set signals{ioc, SIGINT, SIGTERM};
  Registry registry;
  std::thread io_thread;
  std::mutex done_mutex;
  std::condition_variable done_cv;
  bool done = false;

  Impl(ServerConfig c, std::shared_ptr<Gateway> gateway, const Clock& clock)
      : config(std::move(c)), hub(std::move(gateway), clock, HubOptions{config.session, config.data_dir}) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), hub, registry, workers)->run();
      accept();
    });
  }

  void schedule_tick() {
    ticker.expires_after(config.tick_interval);
    ticker.async_wait([this](beast::error_code ec) {
      if (ec) return;
      asio::post(workers, [this] {
        hub.tick([this](const Outbound& out) { registry.deliver(out.message.session_id, out); });
      });
      schedule_tick();
    });
  }

  void shutdown() {
    beast::error_code ec;
    acceptor.close(ec);
    ticker.cancel();
    signals.cancel();
    ioc.stop();
    std::lock_guard lock(done_mutex);
    done = true;
    done_cv.notify_all();
  }
};

WsServer::WsServer(ServerConfig config, std::shared_ptr<Gateway> gateway, const Clock& clock)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(gateway), clock)) {}

WsServer::~WsServer() { stop(); }

unsigned short WsServer::start() {
  auto& i = *impl_;
  beast::error_code ec;
  const auto address = asio::ip::make_address(i.config.host, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "invalid host '" + i.config.host + "': " + ec.message());
  const tcp::endpoint endpoint{address, i.config.port};
  i.acceptor.open(endpoint.protocol(), ec);
  if (!ec) i.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) i.acceptor.bind(endpoint, ec);
  if (!ec) i.acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::ConfigError,
                "cannot listen on " + i.config.host + ":" + std::to_string(i.config.port) + ": " + ec.message());
  }
  const unsigned short port = i.acceptor.local_endpoint().port();
  i.accept();
  i.schedule_tick();
  i.signals.async_wait([this](beast::error_code err, int) {
    if (!err) impl_->shutdown();
  });
  i.io_thread = std::thread([this] { impl_->ioc.run(); });
  return port;
}

void WsServer::stop() {
  if (!impl_) return;
  asio::post(impl_->ioc, [this] { impl_->shutdown(); });
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  impl_->workers.join();
}

void WsServer::wait() {
  std::unique_lock lock(impl_->done_mutex);
  impl_->done_cv.wait(lock, [this] { return impl_->done; });
}

}  // namespace meetflow
