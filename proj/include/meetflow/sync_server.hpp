#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "meetflow/clock.hpp"
#include "meetflow/genai_gateway.hpp"
#include "meetflow/session.hpp"

namespace meetflow {

// {type, session_id, seq?, payload}. Server messages carry the event kind as
// type and the event seq; errors use type "error" and no seq.
struct WireMessage {
  std::string type;
  std::string session_id;
  std::optional<std::uint64_t> seq;
  Json payload = Json::object();

  bool operator==(const WireMessage&) const = default;
};

Json wire_json(const WireMessage& m);
WireMessage parse_wire_message(std::string_view text);  // ProtocolError

enum class Audience { everyone, only, everyone_except };

struct Outbound {
  Audience audience = Audience::everyone;
  ParticipantId participant;  // for only / everyone_except
  WireMessage message;

  bool delivers_to(const ParticipantId& id) const;
};

// The event as seen by `viewer`. Focus selections and totals stay private to
// their owner.
WireMessage event_message(const std::string& session_id, const EventRecord& event,
                          const std::optional<ParticipantId>& viewer);

WireMessage error_message(const std::string& session_id, ErrorCode code, std::string_view message);

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void append(const EventRecord& event) = 0;
};

// <data_dir>/sessions/<id>.log, flushed per line.
class FileEventSink final : public EventSink {
 public:
  FileEventSink(const std::filesystem::path& data_dir, const std::string& session_id);
  void append(const EventRecord& event) override;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::filesystem::path session_log_path(const std::filesystem::path& data_dir, const std::string& session_id);

struct HubOptions {
  SessionConfig defaults;
  std::optional<std::filesystem::path> data_dir;  // no persistence when empty
};

using Deliver = std::function<void(const Outbound&)>;

class SessionHub {
 public:
  SessionHub(std::shared_ptr<Gateway> gateway, const Clock& clock, HubOptions options = {});
  ~SessionHub();

  // Runs the initial plan and focus tool generation; nothing is kept if either fails.
  std::string create_session(const Invitation& invitation, std::optional<SessionConfig> config = std::nullopt);

  // Applies one command on the session's serialized path. `deliver` runs under
  // the session lock, so every recipient sees messages in append order.
  // Command errors are reported to the sender as an error message and leave
  // the session untouched.
  void handle_command(const std::string& session_id, const ParticipantId& participant, const WireMessage& command,
                      const Deliver& deliver);
  std::vector<Outbound> handle_command(const std::string& session_id, const ParticipantId& participant,
                                       const WireMessage& command);

  // Commits due proposals and fires response deadlines for every session.
  void tick(const Deliver& deliver);
  std::vector<Outbound> tick();

  SessionState snapshot(const std::string& session_id) const;
  std::vector<EventRecord> event_log(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  bool has_session(const std::string& session_id) const;

  // Earliest instant at which tick() would change some session, if any.
  std::optional<Timestamp> next_deadline() const;

 private:
  struct Slot;

  std::shared_ptr<Slot> find(const std::string& session_id) const;
  struct Draft {
    EventKind kind;
    Json payload;
  };

  std::vector<Draft> due_drafts(Slot& slot, Timestamp now);
  std::vector<Draft> command_drafts(const SessionState& state, const ParticipantId& participant,
                                    const WireMessage& command, Timestamp now);
  std::vector<Draft> close_responses(const SessionState& state, Timestamp now);
  std::vector<EventRecord> commit(Slot& slot, const std::vector<Draft>& drafts, Timestamp now);
  void publish(const Slot& slot, const std::vector<EventRecord>& events, const Deliver& deliver) const;

  std::shared_ptr<Gateway> gateway_;
  const Clock& clock_;
  HubOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t created_counter_ = 0;
};

}  // namespace meetflow
