#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace autocurriculum {

inline constexpr int kProtocolVersion = 1;

enum class MessageType : std::uint8_t { Join, Plan, EpisodeReport, Frame, Status };
std::string_view message_type_name(MessageType t);
std::optional<MessageType> parse_message_type(std::string_view name);

/// One line on the wire: a JSON object with "type", "sender", an optional
/// "plan_id" and the type's own fields, serialized with sorted keys.
struct BusMessage {
  MessageType type = MessageType::Status;
  std::string sender;
  std::optional<std::uint64_t> plan_id;
  nlohmann::json fields = nlohmann::json::object();

  std::string encode() const;  // without the trailing newline
  /// Throws DataError on anything that is not a well-formed message.
  static BusMessage decode(std::string_view line);
};

struct PlanPayload {
  std::vector<std::string> captions;
  int repetitions = 5;
  int segment_steps = 50;
  double epsilon = 0.0;
  /// Optional per-worker repetition counts, indexed by worker index; used to
  /// hit an exact episode budget on the last plan.
  std::vector<int> quota;

  int repetitions_for(int worker_index) const;
  bool operator==(const PlanPayload&) const = default;
};

struct EpisodeReport {
  std::string worker;
  int worker_index = 0;
  std::uint64_t plan_id = 0;
  int repetition = 0;
  bool success = false;
  std::vector<double> segment_finals;
  std::string episode_ref;  // "<shard file>#<episode id>", empty when nothing was stored
  std::string error;
  bool operator==(const EpisodeReport&) const = default;
};

BusMessage join_message(const std::string& sender, const std::string& role, int worker_index = -1);
BusMessage plan_message(const std::string& sender, std::uint64_t plan_id, const PlanPayload& p);
PlanPayload plan_payload(const BusMessage& m);
BusMessage report_message(const EpisodeReport& r);
EpisodeReport episode_report(const BusMessage& m);
BusMessage status_message(const std::string& sender, const std::string& event,
                          nlohmann::json fields = nlohmann::json::object());

/// Blocking line-oriented TCP connection.
class BusConnection {
 public:
  /// Throws TransportError when nothing accepts within `timeout_seconds`.
  static BusConnection connect(const std::string& host, int port, double timeout_seconds = 5);
  explicit BusConnection(int fd) : fd_(fd) {}
  BusConnection(BusConnection&& o) noexcept;
  BusConnection& operator=(BusConnection&& o) noexcept;
  BusConnection(const BusConnection&) = delete;
  ~BusConnection();

  void send(const BusMessage& m);
  /// Next message, or nullopt on timeout. Throws TransportError once the
  /// peer has closed the connection.
  std::optional<BusMessage> receive(double timeout_seconds);
  void close();
  bool open() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::string buffer_;
};

struct BrokerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
};

/// Per-type message counters, plus PLAN deliveries per plan id.
struct BrokerStats {
  std::map<std::string, std::uint64_t> received;
  std::map<std::uint64_t, std::uint64_t> plan_deliveries;
  int workers = 0;
  int curricula = 0;
};

/// Star-shaped relay: workers and curriculum clients JOIN; PLANs from a
/// curriculum fan out to every joined worker; reports, frames and worker
/// departures flow back to every curriculum client.
class Broker {
 public:
  explicit Broker(BrokerOptions options = {});
  ~Broker();
  Broker(const Broker&) = delete;

  int port() const { return port_; }
  /// Runs the event loop on a background thread.
  void start();
  /// Runs the event loop on the calling thread until stop().
  void serve();
  void stop();
  BrokerStats stats() const;

 private:
  struct Peer;
  void handle(Peer& peer, const std::string& line);
  void drop(std::size_t i);
  void send_to(Peer& peer, const BusMessage& m);

  int listen_fd_ = -1;
  int port_ = 0;
  int wake_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::thread thread_;
  std::vector<std::unique_ptr<Peer>> peers_;
  mutable std::mutex stats_mutex_;
  BrokerStats stats_;
};

}  // namespace autocurriculum
