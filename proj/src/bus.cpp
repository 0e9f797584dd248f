#include "autocurriculum/bus.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLine = 1 << 22;

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd p{fd, POLLOUT, 0};
        ::poll(&p, 1, 1000);
        continue;
      }
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Moves complete lines out of `buffer`.
std::vector<std::string> take_lines(std::string& buffer) {
  std::vector<std::string> out;
  std::size_t start = 0, nl;
  while ((nl = buffer.find('\n', start)) != std::string::npos) {
    out.emplace_back(buffer, start, nl - start);
    start = nl + 1;
  }
  buffer.erase(0, start);
  return out;
}

}  // namespace

// ---- messages -----------------------------------------------------------------

std::string_view message_type_name(MessageType t) {
  switch (t) {
    case MessageType::Join: return "JOIN";
    case MessageType::Plan: return "PLAN";
    case MessageType::EpisodeReport: return "EPISODE_REPORT";
    case MessageType::Frame: return "FRAME";
    case MessageType::Status: return "STATUS";
  }
  return "?";
}

std::optional<MessageType> parse_message_type(std::string_view name) {
  for (auto t : {MessageType::Join, MessageType::Plan, MessageType::EpisodeReport,
                 MessageType::Frame, MessageType::Status})
    if (message_type_name(t) == name) return t;
  return std::nullopt;
}

std::string BusMessage::encode() const {
  json j = fields.is_object() ? fields : json::object();
  j["type"] = message_type_name(type);
  j["sender"] = sender;
  if (plan_id) j["plan_id"] = *plan_id;
  return j.dump();
}

BusMessage BusMessage::decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("bus message is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string() || !j.contains("sender") ||
      !j["sender"].is_string())
    throw DataError("bus message lacks type or sender");
  auto type = parse_message_type(j["type"].get<std::string>());
  if (!type) throw DataError("unknown bus message type " + j["type"].get<std::string>());
  BusMessage m;
  m.type = *type;
  m.sender = j["sender"].get<std::string>();
  if (j.contains("plan_id")) {
    if (!j["plan_id"].is_number_unsigned()) throw DataError("plan_id must be an unsigned integer");
    m.plan_id = j["plan_id"].get<std::uint64_t>();
  }
  j.erase("type");
  j.erase("sender");
  j.erase("plan_id");
  m.fields = std::move(j);
  return m;
}

int PlanPayload::repetitions_for(int worker_index) const {
  if (worker_index >= 0 && static_cast<std::size_t>(worker_index) < quota.size())
    return quota[static_cast<std::size_t>(worker_index)];
  return quota.empty() ? repetitions : 0;
}

BusMessage join_message(const std::string& sender, const std::string& role, int worker_index) {
  json f{{"role", role}, {"version", kProtocolVersion}};
  if (worker_index >= 0) f["worker_index"] = worker_index;
  return {MessageType::Join, sender, std::nullopt, f};
}

BusMessage plan_message(const std::string& sender, std::uint64_t plan_id, const PlanPayload& p) {
  json f{{"captions", p.captions},
         {"repetitions", p.repetitions},
         {"segment_steps", p.segment_steps},
         {"epsilon", p.epsilon}};
  if (!p.quota.empty()) f["quota"] = p.quota;
  return {MessageType::Plan, sender, plan_id, f};
}

PlanPayload plan_payload(const BusMessage& m) {
  if (m.type != MessageType::Plan || !m.plan_id) throw DataError("not a PLAN message");
  try {
    PlanPayload p;
    p.captions = m.fields.at("captions").get<std::vector<std::string>>();
    p.repetitions = m.fields.at("repetitions").get<int>();
    p.segment_steps = m.fields.at("segment_steps").get<int>();
    p.epsilon = m.fields.value("epsilon", 0.0);
    if (m.fields.contains("quota")) p.quota = m.fields["quota"].get<std::vector<int>>();
    if (p.captions.empty() || p.repetitions < 0 || p.segment_steps < 1)
      throw DataError("PLAN payload out of range");
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed PLAN payload: ") + e.what());
  }
}

BusMessage report_message(const EpisodeReport& r) {
  json f{{"worker_index", r.worker_index},
         {"repetition", r.repetition},
         {"success", r.success},
         {"segment_finals", r.segment_finals},
         {"episode", r.episode_ref}};
  if (!r.error.empty()) f["error"] = r.error;
  return {MessageType::EpisodeReport, r.worker, r.plan_id, f};
}

EpisodeReport episode_report(const BusMessage& m) {
  if (m.type != MessageType::EpisodeReport || !m.plan_id)
    throw DataError("not an EPISODE_REPORT message");
  try {
    EpisodeReport r;
    r.worker = m.sender;
    r.plan_id = *m.plan_id;
    r.worker_index = m.fields.at("worker_index").get<int>();
    r.repetition = m.fields.at("repetition").get<int>();
    r.success = m.fields.at("success").get<bool>();
    r.segment_finals = m.fields.at("segment_finals").get<std::vector<double>>();
    r.episode_ref = m.fields.value("episode", "");
    r.error = m.fields.value("error", "");
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed EPISODE_REPORT: ") + e.what());
  }
}

BusMessage status_message(const std::string& sender, const std::string& event, json fields) {
  fields["event"] = event;
  return {MessageType::Status, sender, std::nullopt, std::move(fields)};
}

// ---- connection ---------------------------------------------------------------

BusConnection BusConnection::connect(const std::string& host, int port, double timeout_seconds) {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw TransportError("cannot resolve bus host " + host);
  std::string last = "timed out";
  while (true) {
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
      freeaddrinfo(res);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return BusConnection(fd);
    }
    last = std::strerror(errno);
    if (fd >= 0) ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  freeaddrinfo(res);
  throw TransportError("cannot connect to bus at " + host + ":" + std::to_string(port) + ": " + last);
}

BusConnection::BusConnection(BusConnection&& o) noexcept
    : fd_(o.fd_), buffer_(std::move(o.buffer_)) {
  o.fd_ = -1;
}

BusConnection& BusConnection::operator=(BusConnection&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    buffer_ = std::move(o.buffer_);
    o.fd_ = -1;
  }
  return *this;
}

BusConnection::~BusConnection() { close(); }

void BusConnection::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void BusConnection::send(const BusMessage& m) {
  if (fd_ < 0 || !write_all(fd_, m.encode() + "\n")) throw TransportError(sys_error("bus send failed"));
}

std::optional<BusMessage> BusConnection::receive(double timeout_seconds) {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return BusMessage::decode(line);
    }
    if (fd_ < 0) throw TransportError("bus connection is closed");
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    deadline - std::chrono::steady_clock::now())
                    .count();
    if (left < 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (r < 0 && errno != EINTR) throw TransportError(sys_error("bus poll failed"));
    if (r <= 0) continue;
    char buf[65536];
    ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n == 0) throw TransportError("bus peer closed the connection");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(sys_error("bus receive failed"));
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
    if (buffer_.size() > kMaxLine) throw DataError("bus message exceeds the line limit");
  }
}

// ---- broker -------------------------------------------------------------------

struct Broker::Peer {
  int fd = -1;
  std::string buffer;
  std::string role;  // empty until JOIN
  std::string id;
  int worker_index = -1;
};

Broker::Broker(BrokerOptions options) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError(sys_error("cannot create broker socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigError("broker host must be an IPv4 address: " + options.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    std::string why = sys_error("cannot bind broker to " + options.host + ":" +
                                std::to_string(options.port));
    ::close(listen_fd_);
    throw TransportError(why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::pipe(wake_) != 0) {
    ::close(listen_fd_);
    throw TransportError(sys_error("cannot create broker wake pipe"));
  }
}

Broker::~Broker() {
  stop();
  for (auto& p : peers_) ::close(p->fd);
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int fd : wake_)
    if (fd >= 0) ::close(fd);
}

void Broker::start() {
  thread_ = std::thread([this] { serve(); });
}

void Broker::stop() {
  if (!stopping_.exchange(true) && wake_[1] >= 0) {
    char c = 1;
    [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
  }
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

BrokerStats Broker::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

void Broker::send_to(Peer& peer, const BusMessage& m) {
  // A failed write shows up as a hangup on the next poll.
  write_all(peer.fd, m.encode() + "\n");
}

void Broker::drop(std::size_t i) {
  Peer gone = std::move(*peers_[i]);
  ::close(gone.fd);
  peers_.erase(peers_.begin() + static_cast<std::ptrdiff_t>(i));
  {
    std::lock_guard lock(stats_mutex_);
    if (gone.role == "worker") --stats_.workers;
    if (gone.role == "curriculum") --stats_.curricula;
  }
  if (gone.role != "worker") return;
  int workers = 0;
  for (auto& p : peers_) workers += p->role == "worker";
  auto note = status_message("broker", "worker_left",
                             {{"worker", gone.id}, {"worker_index", gone.worker_index}, {"workers", workers}});
  for (auto& p : peers_)
    if (p->role == "curriculum") send_to(*p, note);
}

void Broker::handle(Peer& peer, const std::string& line) {
  BusMessage m;
  try {
    m = BusMessage::decode(line);
  } catch (const DataError& e) {
    send_to(peer, status_message("broker", "error", {{"reason", e.what()}}));
    return;
  }
  {
    std::lock_guard lock(stats_mutex_);
    ++stats_.received[std::string(message_type_name(m.type))];
  }
  if (m.type == MessageType::Join) {
    const int version = m.fields.value("version", 0);
    const std::string role = m.fields.value("role", "");
    if (version != kProtocolVersion || (role != "worker" && role != "curriculum")) {
      send_to(peer, status_message("broker", "rejected",
                                   {{"reason", "unsupported protocol version or role"},
                                    {"version", kProtocolVersion}}));
      return;
    }
    peer.role = role;
    peer.id = m.sender;
    peer.worker_index = m.fields.value("worker_index", -1);
    int workers = 0;
    for (auto& p : peers_) workers += p->role == "worker";
    {
      std::lock_guard lock(stats_mutex_);
      stats_.workers = workers;
      if (role == "curriculum") ++stats_.curricula;
    }
    send_to(peer, status_message("broker", "joined", {{"workers", workers}, {"role", role}}));
    if (role == "worker")
      for (auto& p : peers_)
        if (p->role == "curriculum")
          send_to(*p, status_message("broker", "worker_joined",
                                     {{"worker", peer.id},
                                      {"worker_index", peer.worker_index},
                                      {"workers", workers}}));
    return;
  }
  if (peer.role.empty()) {
    send_to(peer, status_message("broker", "error", {{"reason", "JOIN first"}}));
    return;
  }
  switch (m.type) {
    case MessageType::Plan: {
      if (peer.role != "curriculum" || !m.plan_id) {
        send_to(peer, status_message("broker", "error", {{"reason", "only curricula send plans"}}));
        return;
      }
      PlanPayload payload;
      try {
        payload = plan_payload(m);
      } catch (const DataError& e) {
        send_to(peer, status_message("broker", "refused", {{"plan_id", *m.plan_id}, {"reason", e.what()}}));
        return;
      }
      json workers = json::array();
      int expected = 0;
      for (auto& p : peers_) {
        if (p->role != "worker") continue;
        send_to(*p, m);
        workers.push_back({{"worker", p->id}, {"worker_index", p->worker_index}});
        expected += payload.repetitions_for(p->worker_index);
        std::lock_guard lock(stats_mutex_);
        ++stats_.plan_deliveries[*m.plan_id];
      }
      if (workers.empty()) {
        send_to(peer, status_message("broker", "refused",
                                     {{"plan_id", *m.plan_id}, {"reason", "no workers joined"}}));
        return;
      }
      send_to(peer, status_message("broker", "broadcast",
                                   {{"plan_id", *m.plan_id}, {"workers", workers}, {"expected", expected}}));
      return;
    }
    case MessageType::EpisodeReport:
    case MessageType::Frame:
    case MessageType::Status:
      for (auto& p : peers_)
        if (p.get() != &peer && p->role == "curriculum") send_to(*p, m);
      return;
    case MessageType::Join: return;
  }
}

void Broker::serve() {
  while (!stopping_) {
    std::vector<pollfd> fds;
    fds.push_back({wake_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (auto& p : peers_) fds.push_back({p->fd, POLLIN, 0});
    int r = ::poll(fds.data(), fds.size(), 500);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("broker poll failed"));
    }
    if (stopping_) break;
    if (fds[1].revents & POLLIN) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        auto peer = std::make_unique<Peer>();
        peer->fd = fd;
        peers_.push_back(std::move(peer));
      }
    }
    // Walk backwards so drops do not shift the peers still to visit.
    const std::size_t polled = fds.size() - 2;
    for (std::size_t k = polled; k-- > 0;) {
      const pollfd& pf = fds[k + 2];
      if (!pf.revents) continue;
      std::size_t i = k;
      Peer& peer = *peers_[i];
      char buf[65536];
      ssize_t n = ::recv(peer.fd, buf, sizeof buf, 0);
      if (n <= 0) {
        if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
        drop(i);
        continue;
      }
      peer.buffer.append(buf, static_cast<std::size_t>(n));
      if (peer.buffer.size() > kMaxLine) {
        drop(i);
        continue;
      }
      for (const auto& line : take_lines(peer.buffer)) handle(peer, line);
    }
  }
  // Closing every connection tells workers the run is over.
  for (auto& p : peers_) ::close(p->fd);
  peers_.clear();
}

}  // namespace autocurriculum
