#include "smsim/ims_core.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <sstream>

#include "smsim/crypto.hpp"

namespace smsim::ims {

SecurityMode parse_security_mode(std::string_view name) {
  if (name == "DIGEST_ONLY") return SecurityMode::DigestOnly;
  if (name == "IPSEC_3GPP") return SecurityMode::Ipsec3gpp;
  if (name == "TLS" || name == "IPSEC_IKE" || name == "IPSEC_MAIN") {
    throw PolicyError("security mode " + std::string(name) + " is not modeled; use DIGEST_ONLY or IPSEC_3GPP");
  }
  throw PolicyError("unknown security mode: " + std::string(name));
}

OriginCheck parse_origin_check(std::string_view name) {
  if (name == "NONE") return OriginCheck::None;
  if (name == "CARRIER_SCOPE") return OriginCheck::CarrierScope;
  if (name == "STRICT") return OriginCheck::Strict;
  throw PolicyError("unknown origin check: " + std::string(name));
}

std::string_view to_string(SecurityMode m) { return m == SecurityMode::DigestOnly ? "DIGEST_ONLY" : "IPSEC_3GPP"; }

std::string_view to_string(OriginCheck c) {
  switch (c) {
    case OriginCheck::None: return "NONE";
    case OriginCheck::CarrierScope: return "CARRIER_SCOPE";
    case OriginCheck::Strict: return "STRICT";
  }
  return "?";
}

OriginVerdict origin_check(std::string_view from_number, std::string_view auth_identity, OriginCheck mode,
                           const std::set<std::string>& carrier_numbers) {
  switch (mode) {
    case OriginCheck::None: return OriginVerdict::Accept;
    case OriginCheck::CarrierScope:
      return carrier_numbers.contains(std::string(from_number)) ? OriginVerdict::Accept : OriginVerdict::Reject;
    case OriginCheck::Strict: return from_number == auth_identity ? OriginVerdict::Accept : OriginVerdict::Reject;
  }
  return OriginVerdict::Reject;
}

SlidingWindowLimiter::SlidingWindowLimiter(std::size_t max_msgs, SimTime window) : max_(max_msgs), window_(window) {
  if (window <= 0) throw PolicyError("rate-limit window must be positive");
}

void SlidingWindowLimiter::expire(std::deque<SimTime>& q, SimTime now) const {
  while (!q.empty() && q.front() <= now - window_) q.pop_front();
}

bool SlidingWindowLimiter::admit(const std::string& key, SimTime now) {
  auto& q = admitted_[key];
  expire(q, now);
  if (q.size() >= max_) return false;
  q.push_back(now);
  return true;
}

std::size_t SlidingWindowLimiter::count(const std::string& key, SimTime now) {
  auto it = admitted_.find(key);
  if (it == admitted_.end()) return 0;
  expire(it->second, now);
  return it->second.size();
}

std::optional<std::string> Directory::carrier_of(const std::string& number) const {
  auto it = number_carrier.find(number);
  if (it == number_carrier.end()) return std::nullopt;
  return it->second;
}

std::optional<net::Endpoint> Directory::interconnect_for_number(const std::string& number) const {
  auto carrier = carrier_of(number);
  if (!carrier) return std::nullopt;
  auto it = carrier_interconnect.find(*carrier);
  if (it == carrier_interconnect.end()) return std::nullopt;
  return it->second;
}

bool Directory::is_carrier_interconnect(const net::Endpoint& ep) const {
  return std::any_of(carrier_interconnect.begin(), carrier_interconnect.end(),
                     [&](const auto& kv) { return kv.second == ep; });
}

sip::SipEnvelope relay_message(std::string_view from, std::string_view to, Bytes body, std::string call_id,
                               std::optional<bool> spoofed) {
  sip::SipEnvelope env;
  env.start = sip::RequestLine{"MESSAGE", "tel:" + std::string(to)};
  env.headers = {
      {"From", sip::tel_uri(from)},
      {"To", sip::tel_uri(to)},
      {"Call-ID", std::move(call_id)},
      {"CSeq", "1 MESSAGE"},
      {"Content-Type", std::string(sip::kSmsContentType)},
  };
  if (spoofed) env.headers.push_back({std::string(kOriginAuditHeader), *spoofed ? "spoofed=1" : "spoofed=0"});
  env.set_body(std::move(body));
  return env;
}

bool audit_spoofed(const sip::SipEnvelope& env) { return env.header(kOriginAuditHeader) == "spoofed=1"; }

namespace {

std::string packet_tag(const sip::SipEnvelope& env) {
  if (env.is_request()) return env.request().method;
  return "SIP " + std::to_string(env.status().code);
}

}  // namespace

Carrier::Carrier(net::Fabric& fabric, Directory& directory, CarrierPolicy policy, std::string ims_address,
                 std::uint64_t seed)
    : fabric_(fabric),
      directory_(directory),
      policy_(std::move(policy)),
      address_(std::move(ims_address)),
      rng_(seed),
      burst_(std::numeric_limits<std::size_t>::max(), policy_.approval.burst_window) {
  if (policy_.carrier_id.empty()) throw PolicyError("carrier_id is required");
  if (policy_.rate_limit) {
    if (policy_.rate_limit->max_msgs == 0) throw PolicyError("rate limit must admit at least one message");
    limiter_.emplace(policy_.rate_limit->max_msgs, policy_.rate_limit->window);
  }
  if (!crypto::is_supported_hash(policy_.hash_label)) throw PolicyError("unsupported hash " + policy_.hash_label);
  fabric_.register_endpoint(ims_endpoint(), [this](const net::Datagram& d) { on_device_datagram(d); });
  fabric_.register_endpoint(interconnect_endpoint(), [this](const net::Datagram& d) { on_interconnect_datagram(d); });
  directory_.carrier_interconnect[policy_.carrier_id] = interconnect_endpoint();
  directory_.network_elements.insert(interconnect_endpoint());
}

void Carrier::add_subscriber(const std::string& number, Bytes auth_key) {
  if (!is_digit_string(number) || is_short_code(number)) throw PolicyError("invalid subscriber number " + number);
  if (directory_.number_carrier.contains(number)) throw PolicyError("number " + number + " already assigned");
  subscribers_[number] = std::move(auth_key);
  numbers_.insert(number);
  directory_.number_carrier[number] = policy_.carrier_id;
}

void Carrier::set_reachable(const std::string& number, bool reachable) {
  if (reachable) {
    unreachable_.erase(number);
  } else {
    unreachable_.insert(number);
  }
}

const Registration* Carrier::registration(const std::string& number) const {
  auto it = registrations_.find(number);
  return it == registrations_.end() ? nullptr : &it->second;
}

std::uint64_t Carrier::counter(const std::string& name) const {
  auto it = counters_.find(name);
  return it == counters_.end() ? 0 : it->second;
}

std::string Carrier::fresh_nonce() {
  Bytes raw(16);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng_());
  return to_hex(raw);
}

std::optional<std::string> Carrier::identity_for_address(const std::string& addr) const {
  auto it = address_identity_.find(addr);
  if (it == address_identity_.end()) return std::nullopt;
  return it->second;
}

void Carrier::on_device_datagram(const net::Datagram& d) {
  sip::SipEnvelope request;
  try {
    request = sip::parse(d.payload);
  } catch (const sip::SipError& e) {
    bump("rejected_unparseable");
    fabric_.note("ims " + id() + " drop unparseable from " + d.src.str() + ": " + e.what());
    return;
  }
  if (!request.is_request()) return;
  sip::SipEnvelope response;
  if (request.is_method("REGISTER")) {
    response = handle_register(request, d.src);
  } else if (request.is_method("MESSAGE")) {
    response = handle_message(request, d.src);
  } else {
    response = sip::respond_to(request, 400);
  }
  fabric_.send_datagram(ims_endpoint(), d.src, sip::serialize(response), packet_tag(response));
}

sip::SipEnvelope Carrier::handle_register(const sip::SipEnvelope& request, const net::Endpoint& src) {
  const auto from = request.header("From");
  const auto identity = from ? sip::tel_number(*from) : std::nullopt;
  if (!identity || !subscribers_.contains(*identity)) {
    bump("register_rejected");
    return sip::respond_to(request, 403);
  }
  const Bytes& key = subscribers_.at(*identity);
  Registration& reg = registrations_[*identity];
  reg.identity = *identity;

  const auto auth = request.header("Authorization");
  if (!auth) {
    reg.state = Registration::State::Challenged;
    reg.session_key.reset();
    reg.nonce_issued = fresh_nonce();
    reg.endpoint = src;
    bump("register_challenged");
    return sip::respond_to(request, 401, sip::DigestChallenge{policy_.realm, *reg.nonce_issued, policy_.hash_label});
  }

  sip::DigestCredentials creds;
  try {
    creds = sip::parse_credentials(*auth);
  } catch (const sip::SipError&) {
    bump("register_rejected");
    return sip::respond_to(request, 403);
  }
  if (!reg.nonce_issued || creds.nonce != *reg.nonce_issued || creds.username != *identity) {
    bump("register_rejected");
    fabric_.note("ims " + id() + " register " + *identity + " stale or foreign nonce");
    return sip::respond_to(request, 403);
  }
  const sip::DigestChallenge challenge{policy_.realm, *reg.nonce_issued, policy_.hash_label};
  const std::string expected = sip::compute_digest_response(key, challenge, "REGISTER", "sip:" + policy_.realm);
  reg.nonce_issued.reset();
  if (creds.response != expected) {
    bump("register_rejected");
    fabric_.note("ims " + id() + " register " + *identity + " wrong digest");
    return sip::respond_to(request, 403);
  }

  if (reg.state == Registration::State::Registered) address_identity_.erase(reg.endpoint.addr);
  reg.state = Registration::State::Registered;
  reg.endpoint = src;
  address_identity_[src.addr] = *identity;
  sip::SipEnvelope ok = sip::respond_to(request, 200);
  if (policy_.security_mode == SecurityMode::Ipsec3gpp) {
    Bytes material = key;
    const Bytes nonce_bytes = to_bytes(challenge.nonce);
    material.insert(material.end(), nonce_bytes.begin(), nonce_bytes.end());
    reg.session_key = crypto::hash(policy_.hash_label, material);
    sip::attach_integrity_tag(*reg.session_key, ok);
  }
  bump("registered");
  fabric_.note("ims " + id() + " registered " + *identity + " at " + src.str());
  return ok;
}

sip::SipEnvelope Carrier::reject(const sip::SipEnvelope& request, int code, std::string_view why,
                                 std::string_view counter) {
  bump(std::string(counter));
  const auto from = request.header("From");
  fabric_.note("ims " + id() + " " + std::to_string(code) + " " + std::string(why) + " from=" +
               (from ? sip::tel_number(*from).value_or("?") : "?"));
  return sip::respond_to(request, code);
}

sip::SipEnvelope Carrier::handle_message(const sip::SipEnvelope& request, const net::Endpoint& src) {
  const SimTime now = fabric_.now();
  bump("message_received");
  const auto identity = identity_for_address(src.addr);
  if (!identity) return reject(request, 403, "unregistered source " + src.addr, "rejected_unregistered");
  const Registration& reg = registrations_.at(*identity);

  if (policy_.security_mode == SecurityMode::Ipsec3gpp &&
      (!reg.session_key || !sip::verify_integrity_tag(*reg.session_key, request))) {
    return reject(request, 403, "integrity check failed", "rejected_integrity");
  }

  const auto from_header = request.header("From");
  const auto from = from_header ? sip::tel_number(*from_header) : std::nullopt;
  if (!from) return reject(request, 400, "missing From", "rejected_malformed");

  if (origin_check(*from, *identity, policy_.effective_origin_check(), numbers_) == OriginVerdict::Reject) {
    return reject(request, 403, "policy reject identity=" + *identity, "rejected_origin");
  }

  if (const auto auth = request.header("Authorization")) {
    sip::DigestCredentials creds;
    try {
      creds = sip::parse_credentials(*auth);
    } catch (const sip::SipError&) {
      return reject(request, 403, "malformed approval", "rejected_approval");
    }
    auto it = held_.find(creds.nonce);
    if (it == held_.end() || it->second.identity != *identity) {
      return reject(request, 403, "stale approval", "rejected_approval");
    }
    HeldMessage held = std::move(it->second);
    held_.erase(it);
    const std::string expected = sip::compute_digest_response(subscribers_.at(*identity), held.challenge, "MESSAGE",
                                                              held.request.request().request_uri);
    if (creds.response != expected) return reject(request, 403, "wrong approval answer", "rejected_approval");
    bump("approved_440");
    return route(held.request, *identity);
  }

  if (limiter_ && !limiter_->admit(*identity, now)) return reject(request, 429, "rate limited", "rejected_rate");

  const auto recipient = sip::tel_number(request.request().request_uri);
  if (!recipient) return reject(request, 400, "bad Request-URI", "rejected_malformed");
  burst_.admit(*identity, now);
  const bool premium = policy_.approval.premium_codes.contains(*recipient);
  const std::size_t recent = burst_.count(*identity, now);
  const bool burst = policy_.approval.burst_threshold && recent > *policy_.approval.burst_threshold;
  if (premium || burst) {
    const sip::DigestChallenge challenge{policy_.realm, fresh_nonce(), policy_.hash_label};
    std::string text;
    if (premium) {
      text = "Sending a message to " + *recipient + " will produce extra cost. Do you agree with it?";
    } else {
      text = "You have sent " + std::to_string(recent) + " messages in 30 minutes. Do you want to continue?";
    }
    held_[challenge.nonce] = HeldMessage{*identity, request, challenge, src};
    bump("challenged_440");
    fabric_.note("ims " + id() + " 440 hold from=" + *from + " to=" + *recipient);
    return sip::respond_to(request, 440, challenge, text);
  }
  return route(request, *identity);
}

sip::SipEnvelope Carrier::route(const sip::SipEnvelope& request, const std::string& identity) {
  const auto recipient = sip::tel_number(request.request().request_uri);
  const auto from = sip::tel_number(request.header("From").value_or(""));
  if (!recipient || !from) return reject(request, 400, "bad addressing", "rejected_malformed");
  sms::SmsPdu submitted;
  try {
    submitted = sms::decode_pdu(request.body);
  } catch (const sms::CodecError& e) {
    return reject(request, 400, std::string("bad SMS body: ") + e.what(), "rejected_malformed");
  }
  const bool spoofed = *from != identity;
  sms::SmsPdu deliver = sms::make_deliver(*from, *recipient, submitted.bearer.user_data, submitted.bearer.message_id);

  if (is_short_code(*recipient)) {
    auto agg = directory_.short_code_aggregator.find(*recipient);
    if (agg == directory_.short_code_aggregator.end()) {
      return reject(request, 404, "unknown short code " + *recipient, "rejected_unknown");
    }
    const std::string call_id = "relay-" + std::to_string(++relay_counter_) + "@" + id();
    fabric_.send_datagram(interconnect_endpoint(), agg->second,
                          sip::serialize(relay_message(*from, *recipient, sms::encode_pdu(deliver), call_id, spoofed)),
                          "MESSAGE");
    bump("routed_short_code");
  } else {
    const auto carrier = directory_.carrier_of(*recipient);
    if (!carrier) return reject(request, 404, "unknown recipient " + *recipient, "rejected_unknown");
    if (*carrier == id()) {
      smsc_forward(deliver, *recipient, identity);
    } else {
      const std::string call_id = "relay-" + std::to_string(++relay_counter_) + "@" + id();
      fabric_.send_datagram(interconnect_endpoint(), directory_.carrier_interconnect.at(*carrier),
                            sip::serialize(relay_message(*from, *recipient, sms::encode_pdu(deliver), call_id, spoofed)),
                            "MESSAGE");
    }
    bump("routed_subscriber");
  }
  bump("accepted");
  if (spoofed) bump("accepted_spoofed");
  fabric_.note("ims " + id() + " accept from=" + *from + " identity=" + identity + " to=" + *recipient +
               (spoofed ? " spoofed" : ""));
  return sip::respond_to(request, 200);
}

void Carrier::on_interconnect_datagram(const net::Datagram& d) {
  if (!directory_.network_elements.contains(d.src)) {
    bump("interconnect_rejected");
    fabric_.note("ims " + id() + " interconnect drop from unknown element " + d.src.str());
    return;
  }
  try {
    const sip::SipEnvelope env = sip::parse(d.payload);
    const auto recipient = sip::tel_number(env.header("To").value_or(""));
    if (!recipient || !is_subscriber(*recipient)) {
      bump("interconnect_unknown");
      return;
    }
    smsc_forward(sms::decode_pdu(env.body), *recipient);
  } catch (const std::exception& e) {
    bump("interconnect_malformed");
    fabric_.note("ims " + id() + " interconnect malformed: " + e.what());
  }
}

void Carrier::smsc_forward(sms::SmsPdu deliver, const std::string& recipient,
                           const std::optional<std::string>& report_to) {
  const std::uint64_t entry = next_pending_++;
  pending_[entry] = Pending{std::move(deliver), recipient, report_to, fabric_.now(), 0};
  attempt_delivery(entry);
}

void Carrier::attempt_delivery(std::uint64_t entry_id) {
  auto it = pending_.find(entry_id);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  ++p.attempts;
  fabric_.note("smsc " + id() + " attempt " + std::to_string(p.attempts) + " to " + p.recipient);

  const Registration* reg = registration(p.recipient);
  const bool live = reg && reg->state == Registration::State::Registered && !unreachable_.contains(p.recipient);
  if (live) {
    const std::string orig = p.pdu.orig ? p.pdu.orig->digits : std::string();
    const std::string call_id = "mt-" + std::to_string(++relay_counter_) + "@" + id();
    fabric_.send_datagram(ims_endpoint(), reg->endpoint,
                          sip::serialize(relay_message(orig, p.recipient, sms::encode_pdu(p.pdu), call_id)),
                          "SMS-DELIVER");
    bump("smsc_delivered");
    if (p.report_to) {
      if (const Registration* sender = registration(*p.report_to);
          sender && sender->state == Registration::State::Registered) {
        sip::SipEnvelope report = relay_message(p.recipient, *p.report_to, {}, "dr-" + call_id);
        report.set_header(kDeliveryReportHeader, p.recipient);
        fabric_.send_datagram(ims_endpoint(), sender->endpoint, sip::serialize(report), "DELIVERY-REPORT");
        bump("delivery_reports");
      }
    }
    if (p.attempts > 1) --queued_;
    pending_.erase(it);
    return;
  }

  if (p.attempts == 1) {
    if (queued_ >= kQueueCapacity) {
      bump("smsc_dropped");
      pending_.erase(it);
      return;
    }
    ++queued_;
    bump("smsc_queued");
  }
  if (fabric_.now() + kRetryInterval - p.first_attempt > kMaxRetention) {
    bump("smsc_expired");
    --queued_;
    pending_.erase(it);
    return;
  }
  fabric_.schedule_after(kRetryInterval, [this, entry_id] { attempt_delivery(entry_id); });
}

Aggregator::Aggregator(net::Fabric& fabric, Directory& directory, std::string id, net::Endpoint endpoint,
                       bool carrier_only)
    : fabric_(fabric), directory_(directory), id_(std::move(id)), endpoint_(std::move(endpoint)),
      carrier_only_(carrier_only) {
  fabric_.register_endpoint(endpoint_, [this](const net::Datagram& d) { on_datagram(d); });
  directory_.network_elements.insert(endpoint_);
}

void Aggregator::add_route(const std::string& short_code, ProviderRoute route) {
  if (!is_short_code(short_code)) throw PolicyError("invalid short code " + short_code);
  for (auto& k : route.keywords) {
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::toupper(c); });
  }
  provider_endpoints_.insert(route.endpoint);
  routes_[short_code].push_back(std::move(route));
  directory_.short_code_aggregator[short_code] = endpoint_;
}

std::optional<ProviderRoute> Aggregator::select(const std::string& short_code, const std::string& phone,
                                                std::string_view text) {
  auto it = routes_.find(short_code);
  if (it == routes_.end() || it->second.empty()) return std::nullopt;
  const auto& routes = it->second;
  if (routes.size() == 1) return routes.front();

  std::string word;
  std::istringstream(std::string(text)) >> word;
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::toupper(c); });
  for (const auto& r : routes) {
    if (std::find(r.keywords.begin(), r.keywords.end(), word) != r.keywords.end()) {
      affinity_[{short_code, phone}] = r.provider_id;
      return r;
    }
  }
  auto aff = affinity_.find({short_code, phone});
  if (aff != affinity_.end()) {
    for (const auto& r : routes) {
      if (r.provider_id == aff->second) return r;
    }
  }
  return std::nullopt;
}

void Aggregator::on_datagram(const net::Datagram& d) {
  sip::SipEnvelope env;
  try {
    env = sip::parse(d.payload);
  } catch (const sip::SipError&) {
    ++counters_["dropped_malformed"];
    return;
  }
  const auto to = sip::tel_number(env.header("To").value_or(""));
  const auto from = sip::tel_number(env.header("From").value_or(""));
  if (!to || !from) {
    ++counters_["dropped_malformed"];
    return;
  }

  if (provider_endpoints_.contains(d.src)) {
    const auto ic = directory_.interconnect_for_number(*to);
    if (!ic) {
      ++counters_["mt_unroutable"];
      return;
    }
    fabric_.send_datagram(endpoint_, *ic, sip::serialize(env), "MESSAGE");
    ++counters_["mt_relayed"];
    return;
  }

  if (carrier_only_ && !directory_.is_carrier_interconnect(d.src)) {
    ++counters_["rejected_non_carrier"];
    fabric_.note("aggregator " + id_ + " drop non-carrier source " + d.src.str());
    return;
  }
  std::string text;
  try {
    text = sms::decode_pdu(env.body).bearer.user_data.text();
  } catch (const sms::CodecError&) {
    ++counters_["dropped_malformed"];
    return;
  }
  const auto route = select(*to, *from, text);
  if (!route) {
    ++counters_["mo_unroutable"];
    fabric_.note("aggregator " + id_ + " no provider for '" + text + "' to " + *to);
    return;
  }
  if (mutation_hook) mutation_hook(env);
  fabric_.send_datagram(endpoint_, route->endpoint, sip::serialize(env), "MESSAGE");
  ++counters_["mo_relayed"];
}

}  // namespace smsim::ims
