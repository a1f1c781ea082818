#include "smsim/ue.hpp"

#include <algorithm>
#include <stdexcept>

#include "smsim/crypto.hpp"
#include "smsim/ims_core.hpp"
#include "smsim/sms_codec.hpp"

namespace smsim::ue {

std::optional<Decision> ApprovalPolicy::decide() {
  ++consulted_;
  switch (kind_) {
    case Kind::AutoApprove: return Decision::Approve;
    case Kind::AutoDeny: return Decision::Deny;
    case Kind::Script:
      if (next_ >= script_.size()) return std::nullopt;
      return script_[next_++];
  }
  return std::nullopt;
}

std::string_view to_string(SendResult r) {
  switch (r) {
    case SendResult::Sent: return "Sent";
    case SendResult::AwaitingUserConfirm: return "AwaitingUserConfirm";
    case SendResult::AwaitingRateApproval: return "AwaitingRateApproval";
    case SendResult::Blocked: return "Blocked";
  }
  return "?";
}

std::pair<std::string, std::string> discover_ims_address(std::string_view routing_table_text) {
  std::vector<net::RouteEntry> routes;
  try {
    routes = net::parse_routing_table(routing_table_text);
  } catch (const net::RoutingTableError& e) {
    throw DeviceError(std::string("IMS discovery: ") + e.what());
  }
  const auto def = std::find_if(routes.begin(), routes.end(), [](const auto& r) { return r.prefix == "default"; });
  const net::RouteEntry* best = nullptr;
  for (const auto& r : routes) {
    if (r.prefix == "default" || r.dev == def->dev) continue;
    if (!best || r.dev < best->dev) best = &r;
  }
  if (!best) throw DeviceError("IMS discovery: no route on an interface other than " + def->dev);
  return {best->prefix, best->dev};
}

std::string render_template(std::string_view message_template, std::string_view victim) {
  std::string out(message_template);
  const std::string key = "{victim}";
  for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + victim.size())) {
    out.replace(pos, key.size(), victim);
  }
  return out;
}

Device::Device(net::Fabric& fabric, DeviceConfig config)
    : fabric_(fabric), config_(std::move(config)), rng_(config_.seed) {
  if (!is_digit_string(config_.number)) throw DeviceError("device number must be digits");
  const auto [ims_addr, iface] = discover_ims_address(net::render_routing_table(config_.routing_table));
  ims_interface_ = iface;
  profile_.phone_number = config_.number;
  profile_.device_address = config_.device_address;
  profile_.ims_server_address = ims_addr;
  profile_.auth_key = config_.auth_key;
  fabric_.register_endpoint(sip_endpoint(), [this](const net::Datagram& d) { on_datagram(d); });
  bound_ports_.insert(sip::kSipPort);
}

std::uint64_t Device::counter(const std::string& name) const {
  auto it = counters_.find(name);
  return it == counters_.end() ? 0 : it->second;
}

const SendRecord* Device::send_record(const std::string& call_id) const {
  auto it = by_call_id_.find(call_id);
  return it == by_call_id_.end() ? nullptr : &sends_[it->second];
}

void Device::register_with_ims() {
  registered_ = false;
  registration_failed_ = false;
  session_key_.reset();
  const sip::SipEnvelope req = sip::build_register_request(profile_, config_.realm);
  fabric_.send_datagram(sip_endpoint(), {profile_.ims_server_address, sip::kSipPort}, sip::serialize(req), "REGISTER");
}

SendResult Device::send_sms_app(const std::string& recipient, const std::string& text) {
  if (!registered_) throw DeviceError("device " + config_.number + " is not registered");
  bump("app_attempts");
  if (is_short_code(recipient)) {
    const auto d = config_.approval.decide();
    if (!d) {
      bump("app_awaiting_confirm");
      return SendResult::AwaitingUserConfirm;
    }
    if (*d == Decision::Deny) {
      bump("app_blocked");
      return SendResult::Blocked;
    }
  }
  const SimTime now = fabric_.now();
  if (app_window_count_ == 0 || now - app_window_start_ >= kAppWindow) {
    app_window_count_ = 0;
    app_window_start_ = now;
  }
  if (app_window_count_ >= kAppWindowCap) {
    const auto d = config_.approval.decide();
    if (!d) {
      bump("app_awaiting_rate");
      return SendResult::AwaitingRateApproval;
    }
    if (*d == Decision::Deny) {
      bump("app_blocked");
      return SendResult::Blocked;
    }
  }
  ++app_window_count_;
  dispatch(config_.number, recipient, text, false);
  bump("app_sent");
  return SendResult::Sent;
}

std::string Device::attacker_send_raw(const std::string& from_number, const std::string& recipient,
                                      const std::string& text) {
  if (!registered_) throw DeviceError("device " + config_.number + " is not registered");
  bump("raw_sent");
  return dispatch(from_number, recipient, text, true);
}

std::string Device::dispatch(const std::string& from, const std::string& recipient, const std::string& text,
                             bool raw) {
  sms::SmsPdu pdu = sms::make_submit(recipient, sms::UserData::ascii(text));
  if (!raw) {
    if (auto it = secrets_.find(recipient); it != secrets_.end()) {
      pdu = defenses::protect(std::move(pdu), config_.number, it->second.bytes(), config_.mac, mac_seq_[recipient]++);
      bump("mac_tagged");
    }
  }
  SendRecord rec;
  rec.request = sip::build_message_request(profile_, from, recipient, sms::encode_pdu(pdu), config_.phone_context);
  if (!raw && sip::tel_number(*rec.request.header("From")) != config_.number) {
    throw std::logic_error("app path built a MESSAGE with a foreign From");
  }
  rec.call_id = *rec.request.header("Call-ID");
  rec.from = from;
  rec.recipient = recipient;
  rec.text = text;
  rec.raw = raw;
  rec.sent_at = fabric_.now();
  rec.source = raw ? net::Endpoint{config_.device_address, ephemeral_port()} : sip_endpoint();
  by_call_id_[rec.call_id] = sends_.size();
  sends_.push_back(std::move(rec));
  transmit(sends_.back());
  return sends_.back().call_id;
}

void Device::transmit(SendRecord& rec) {
  sip::SipEnvelope env = rec.request;
  // Raw sockets never see the IPsec security association.
  if (!rec.raw && session_key_) sip::attach_integrity_tag(*session_key_, env);
  fabric_.send_datagram(rec.source, {profile_.ims_server_address, sip::kSipPort}, sip::serialize(env), "MESSAGE");
}

std::uint16_t Device::ephemeral_port() {
  std::uniform_int_distribution<int> dist(49152, 65535);
  const auto port = static_cast<std::uint16_t>(dist(rng_));
  if (bound_ports_.insert(port).second) {
    fabric_.register_endpoint({config_.device_address, port}, [this](const net::Datagram& d) { on_datagram(d); });
  }
  return port;
}

void Device::run_attack_script(const AttackScript& script) {
  if (script.inter_message_delay < 0) throw DeviceError("inter-message delay must be non-negative");
  SimTime offset = 0;
  for (const auto& victim : script.victim_numbers) {
    const std::string first = render_template(script.message_template, victim);
    fabric_.schedule_after(offset, [this, victim, code = script.target_code, first] {
      attacker_send_raw(victim, code, first);
    });
    if (script.second_message) {
      fabric_.schedule_after(offset + script.second_message->delay,
                             [this, victim, code = script.target_code, text = script.second_message->text] {
                               attacker_send_raw(victim, code, render_template(text, victim));
                             });
    }
    offset += script.inter_message_delay;
  }
}

void Device::set_online(bool online) {
  online_ = online;
  if (on_reachability) on_reachability(config_.number, online);
}

void Device::add_secret(const std::string& short_code, defenses::SecretCode secret) {
  secrets_[short_code] = std::move(secret);
}

void Device::on_datagram(const net::Datagram& d) {
  sip::SipEnvelope env;
  try {
    env = sip::parse(d.payload);
  } catch (const sip::SipError&) {
    bump("dropped_malformed");
    return;
  }
  if (env.is_request()) {
    if (env.is_method("MESSAGE")) on_incoming_message(env);
    return;
  }
  on_response(env);
}

void Device::on_register_response(const sip::SipEnvelope& resp) {
  const int code = resp.status().code;
  if (code == 401) {
    const auto www = resp.header("WWW-Authenticate");
    if (!www) {
      registration_failed_ = true;
      return;
    }
    last_challenge_ = sip::parse_challenge(*www);
    const std::string uri = "sip:" + config_.realm;
    sip::DigestCredentials creds{config_.number, last_challenge_->realm, last_challenge_->nonce, uri,
                                 sip::compute_digest_response(config_.auth_key, *last_challenge_, "REGISTER", uri),
                                 last_challenge_->algorithm_label};
    const sip::SipEnvelope req = sip::build_register_request(profile_, config_.realm, creds);
    fabric_.send_datagram(sip_endpoint(), {profile_.ims_server_address, sip::kSipPort}, sip::serialize(req),
                          "REGISTER");
    return;
  }
  if (code == 200 && last_challenge_) {
    if (config_.ipsec) {
      Bytes material = config_.auth_key;
      const Bytes nonce = to_bytes(last_challenge_->nonce);
      material.insert(material.end(), nonce.begin(), nonce.end());
      Bytes key = crypto::hash(config_.hash_label, material);
      if (!sip::verify_integrity_tag(key, resp)) {
        registration_failed_ = true;
        bump("register_bad_tag");
        return;
      }
      session_key_ = std::move(key);
    }
    registered_ = true;
    bump("registered");
    return;
  }
  registration_failed_ = true;
  bump("register_failed");
}

void Device::on_response(const sip::SipEnvelope& resp) {
  const std::string cseq = resp.header("CSeq").value_or("");
  if (cseq.find("REGISTER") != std::string::npos) {
    on_register_response(resp);
    return;
  }
  auto it = by_call_id_.find(resp.header("Call-ID").value_or(""));
  if (it == by_call_id_.end()) {
    bump("unmatched_responses");
    return;
  }
  SendRecord& rec = sends_[it->second];
  const int code = resp.status().code;
  if (code == 440) {
    handle_440(rec, resp);
    return;
  }
  rec.final_code = code;
  const std::string path = rec.raw ? "raw_" : "app_";
  if (code == 200) {
    bump(path + "accepted");
  } else {
    bump(path + "rejected_" + std::to_string(code));
    if (rec.challenges > 0) {
      rec.abandoned = true;
      bump("abandoned_440");
    }
  }
}

void Device::handle_440(SendRecord& rec, const sip::SipEnvelope& resp) {
  ++rec.challenges;
  bump("challenges_440");
  bool approve = false;
  if (rec.raw) {
    approve = config_.raw_answers_440;
  } else {
    const auto d = config_.approval.decide();
    approve = d && *d == Decision::Approve;
  }
  const auto www = resp.header("WWW-Authenticate");
  if (!approve || !www) {
    rec.abandoned = true;
    rec.final_code = 440;
    bump("abandoned_440");
    return;
  }
  const sip::DigestChallenge ch = sip::parse_challenge(*www);
  const std::string uri = rec.request.request().request_uri;
  const sip::DigestCredentials creds{config_.number, ch.realm, ch.nonce, uri,
                                     sip::compute_digest_response(config_.auth_key, ch, "MESSAGE", uri),
                                     ch.algorithm_label};
  SendRecord resubmit = rec;
  resubmit.request.set_header("Authorization", sip::format_credentials(creds));
  bump("resubmitted_440");
  transmit(resubmit);
}

void Device::on_incoming_message(const sip::SipEnvelope& req) {
  if (req.header(ims::kDeliveryReportHeader)) {
    bump("delivery_reports");
    return;
  }
  sms::SmsPdu pdu;
  try {
    pdu = sms::decode_pdu(req.body);
  } catch (const sms::CodecError&) {
    bump("dropped_malformed");
    return;
  }
  InboxEntry entry;
  entry.at = fabric_.now();
  entry.from = pdu.orig ? pdu.orig->digits : sip::tel_number(req.header("From").value_or("")).value_or("");
  if (auto it = secrets_.find(entry.from); it != secrets_.end()) {
    const auto result = defenses::verify_and_strip(pdu, it->second.bytes(), config_.mac, inbound_seq_[entry.from]);
    entry.auth = result.status;
    entry.text = to_text(result.payload);
  } else {
    entry.text = pdu.bearer.user_data.text();
  }
  bump("received");
  if (config_.inbox_enabled) inbox_.push_back(std::move(entry));
}

}  // namespace smsim::ue
