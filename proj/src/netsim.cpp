#include "smsim/netsim.hpp"

#include <charconv>
#include <sstream>

namespace smsim::net {

Fabric::Fabric(FabricConfig config) : config_(config), rng_(config.seed) {
  if (config_.latency_ms < 0 || config_.jitter_ms < 0) throw NetError("latency and jitter must be non-negative");
}

EndpointId Fabric::register_endpoint(const Endpoint& ep, Handler handler) {
  if (!endpoints_.emplace(ep, std::move(handler)).second) throw NetError("endpoint already bound: " + ep.str());
  return next_id_++;
}

bool Fabric::is_bound(const Endpoint& ep) const { return endpoints_.contains(ep); }

SimTime Fabric::send_datagram(const Endpoint& src, const Endpoint& dst, Bytes payload, std::string tag) {
  SimTime delay = config_.latency_ms;
  if (config_.jitter_ms > 0) {
    delay += std::uniform_int_distribution<SimTime>(0, config_.jitter_ms)(rng_);
  }
  Datagram d{src, dst, std::move(payload), now_ + delay, std::move(tag)};
  const SimTime at = d.deliver_at;
  ++stats_.sent;
  queue_.push(Event{at, next_seq_++, std::move(d)});
  return at;
}

void Fabric::schedule_at(SimTime at, std::function<void()> action) {
  if (at < now_) throw NetError("cannot schedule in the past");
  queue_.push(Event{at, next_seq_++, std::move(action)});
}

void Fabric::dispatch(Event& ev) {
  now_ = ev.at;
  if (auto* d = std::get_if<Datagram>(&ev.what)) {
    std::string line = "t=" + std::to_string(now_) + " " + d->src.str() + " -> " + d->dst.str() + " " +
                       std::to_string(d->payload.size()) + " bytes " + d->tag;
    auto it = endpoints_.find(d->dst);
    if (it == endpoints_.end()) {
      ++stats_.dropped;
      log_.push_back(line + " [dropped]");
      return;
    }
    ++stats_.delivered;
    log_.push_back(std::move(line));
    it->second(*d);
  } else {
    std::get<std::function<void()>>(ev.what)();
  }
}

std::size_t Fabric::run_until(SimTime t) {
  std::size_t count = 0;
  while (!queue_.empty() && queue_.top().at <= t) {
    // priority_queue::top is const; the event is moved out before popping.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    dispatch(ev);
    ++count;
  }
  if (t > now_) now_ = t;
  return count;
}

std::size_t Fabric::run() {
  std::size_t count = 0;
  while (!queue_.empty()) {
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    dispatch(ev);
    ++count;
  }
  return count;
}

void Fabric::note(std::string_view text) { log_.push_back("t=" + std::to_string(now_) + " " + std::string(text)); }

std::string render_routing_table(std::span<const RouteEntry> entries) {
  std::size_t defaults = 0;
  std::ostringstream out;
  for (const RouteEntry& e : entries) {
    if (e.prefix.empty() || e.via.empty() || e.dev.empty()) throw NetError("route entry has empty fields");
    if (e.prefix == "default") ++defaults;
    out << e.prefix << " via " << e.via << " dev " << e.dev;
    if (e.metric) out << " metric " << *e.metric;
    out << '\n';
  }
  if (defaults != 1) throw NetError("routing table needs exactly one default route");
  return out.str();
}

std::vector<RouteEntry> parse_routing_table(std::string_view text) {
  std::vector<RouteEntry> entries;
  std::size_t line_no = 0;
  std::size_t defaults = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    if (tok.size() != 5 && tok.size() != 7) throw RoutingTableError(line_no, "expected 5 or 7 fields");
    if (tok[1] != "via" || tok[3] != "dev") throw RoutingTableError(line_no, "expected '<prefix> via <addr> dev <if>'");
    RouteEntry e{tok[0], tok[2], tok[4], std::nullopt};
    if (tok.size() == 7) {
      if (tok[5] != "metric") throw RoutingTableError(line_no, "expected 'metric'");
      int m = 0;
      auto [ptr, ec] = std::from_chars(tok[6].data(), tok[6].data() + tok[6].size(), m);
      if (ec != std::errc() || ptr != tok[6].data() + tok[6].size()) throw RoutingTableError(line_no, "bad metric");
      e.metric = m;
    }
    if (e.prefix == "default") ++defaults;
    entries.push_back(std::move(e));
  }
  if (defaults != 1) throw RoutingTableError(line_no, "routing table needs exactly one default route");
  return entries;
}

}  // namespace smsim::net
