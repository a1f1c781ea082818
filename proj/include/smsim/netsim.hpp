#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smsim/bytes.hpp"

namespace smsim::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string addr;
  std::uint16_t port = 0;

  std::string str() const { return addr + ":" + std::to_string(port); }
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

struct Datagram {
  Endpoint src;
  Endpoint dst;
  Bytes payload;
  SimTime deliver_at = 0;
  std::string tag;
};

using Handler = std::function<void(const Datagram&)>;
using EndpointId = std::uint32_t;

struct FabricConfig {
  SimTime latency_ms = 50;
  SimTime jitter_ms = 0;  // uniform extra delay in [0, jitter_ms]
  std::uint64_t seed = 0;
};

/// Single-threaded discrete-event loop under a virtual clock. Datagrams and
/// timers share one queue ordered by (time, sequence number).
class Fabric {
 public:
  struct Stats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
  };

  explicit Fabric(FabricConfig config = {});
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  /// Throws NetError when (addr, port) is already bound.
  EndpointId register_endpoint(const Endpoint& ep, Handler handler);
  bool is_bound(const Endpoint& ep) const;

  /// Queues a datagram for now + latency (+ jitter); returns its deliver_at.
  SimTime send_datagram(const Endpoint& src, const Endpoint& dst, Bytes payload, std::string tag);

  void schedule_at(SimTime at, std::function<void()> action);
  void schedule_after(SimTime delay, std::function<void()> action) { schedule_at(now_ + delay, std::move(action)); }

  /// Processes every event with time <= t, then advances the clock to t.
  /// Returns the number of events processed.
  std::size_t run_until(SimTime t);
  /// Drains the queue completely.
  std::size_t run();

  SimTime now() const { return now_; }
  bool idle() const { return queue_.empty(); }
  const FabricConfig& config() const { return config_; }
  const Stats& stats() const { return stats_; }

  /// Appends `t=<now> <text>` to the event log.
  void note(std::string_view text);
  const std::vector<std::string>& event_log() const { return log_; }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    std::variant<Datagram, std::function<void()>> what;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.at != b.at ? a.at > b.at : a.seq > b.seq; }
  };

  void dispatch(Event& ev);

  FabricConfig config_;
  std::mt19937_64 rng_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<Endpoint, Handler> endpoints_;
  EndpointId next_id_ = 1;
  Stats stats_;
  std::vector<std::string> log_;
};

struct RouteEntry {
  std::string prefix;  // "default" or an address prefix
  std::string via;
  std::string dev;
  std::optional<int> metric;
  friend bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

class RoutingTableError : public std::runtime_error {
 public:
  RoutingTableError(std::size_t line, const std::string& what)
      : std::runtime_error("routing table line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One `<prefix> via <via> dev <dev>[ metric <m>]` line per entry.
std::string render_routing_table(std::span<const RouteEntry> entries);
/// Inverse of render; requires exactly one default route.
std::vector<RouteEntry> parse_routing_table(std::string_view text);

}  // namespace smsim::net
