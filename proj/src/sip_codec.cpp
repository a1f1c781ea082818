#include "smsim/sip_codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>

#include "smsim/crypto.hpp"

namespace smsim::sip {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::string_view kCrlf = "\r\n";
constexpr std::string_view kVersion = "SIP/2.0";

std::string bracket(std::string_view addr) { return "[" + std::string(addr) + "]"; }

std::string call_id_for(const DeviceProfile& p) {
  return std::to_string(p.call_id_counter) + "@" + p.device_address;
}

std::string via_for(const DeviceProfile& p) {
  return "SIP/2.0/UDP " + bracket(p.device_address) + ":" + std::to_string(kSipPort) + ";branch=z9hG4bK" +
         std::to_string(p.call_id_counter);
}

// key=value pairs after an auth scheme token; values may be quoted.
std::map<std::string, std::string> parse_auth_params(std::string_view value, std::string_view scheme) {
  while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  if (value.size() < scheme.size() || !iequals(value.substr(0, scheme.size()), scheme)) {
    throw SipError("expected " + std::string(scheme) + " auth scheme");
  }
  value.remove_prefix(scheme.size());
  std::map<std::string, std::string> params;
  std::size_t i = 0;
  while (i < value.size()) {
    while (i < value.size() && (value[i] == ' ' || value[i] == ',')) ++i;
    if (i >= value.size()) break;
    const std::size_t eq = value.find('=', i);
    if (eq == std::string_view::npos) throw SipError("malformed auth parameter");
    std::string key(value.substr(i, eq - i));
    i = eq + 1;
    std::string val;
    if (i < value.size() && value[i] == '"') {
      const std::size_t close = value.find('"', i + 1);
      if (close == std::string_view::npos) throw SipError("unterminated quoted auth parameter");
      val = std::string(value.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      const std::size_t comma = value.find(',', i);
      const std::size_t end = comma == std::string_view::npos ? value.size() : comma;
      val = std::string(value.substr(i, end - i));
      i = end;
    }
    params[key] = val;
  }
  return params;
}

const std::string& require_param(const std::map<std::string, std::string>& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw SipError("missing auth parameter " + key);
  return it->second;
}

}  // namespace

const RequestLine& SipEnvelope::request() const {
  if (!is_request()) throw SipError("envelope is a response");
  return std::get<RequestLine>(start);
}

const StatusLine& SipEnvelope::status() const {
  if (is_request()) throw SipError("envelope is a request");
  return std::get<StatusLine>(start);
}

bool SipEnvelope::is_method(std::string_view method) const {
  return is_request() && std::get<RequestLine>(start).method == method;
}

std::optional<std::string> SipEnvelope::header(std::string_view name) const {
  for (const Header& h : headers) {
    if (iequals(h.name, name)) return h.value;
  }
  return std::nullopt;
}

std::size_t SipEnvelope::count(std::string_view name) const {
  return static_cast<std::size_t>(
      std::count_if(headers.begin(), headers.end(), [&](const Header& h) { return iequals(h.name, name); }));
}

void SipEnvelope::set_header(std::string_view name, std::string value) {
  for (Header& h : headers) {
    if (iequals(h.name, name)) {
      h.value = std::move(value);
      return;
    }
  }
  headers.push_back({std::string(name), std::move(value)});
}

void SipEnvelope::remove_header(std::string_view name) {
  std::erase_if(headers, [&](const Header& h) { return iequals(h.name, name); });
}

void SipEnvelope::set_body(Bytes b) {
  body = std::move(b);
  set_header("Content-Length", std::to_string(body.size()));
}

Bytes serialize(const SipEnvelope& env) {
  std::string head;
  if (env.is_request()) {
    const RequestLine& rl = env.request();
    if (rl.method.empty() || rl.request_uri.empty()) throw SipError("incomplete request line");
    head = rl.method + " " + rl.request_uri + " " + std::string(kVersion);
  } else {
    const StatusLine& sl = env.status();
    if (sl.code < 100 || sl.code > 699) throw SipError("status code out of range");
    head = std::string(kVersion) + " " + std::to_string(sl.code) + " " + sl.reason;
  }
  head += kCrlf;
  for (const Header& h : env.headers) {
    if (h.name.empty() || h.name.find_first_of(": \r\n") != std::string::npos ||
        h.value.find_first_of("\r\n") != std::string::npos) {
      throw SipError("header cannot be framed: " + h.name);
    }
    head += h.name + ": " + h.value + std::string(kCrlf);
  }
  const auto cl = env.header("Content-Length");
  if (!cl || *cl != std::to_string(env.body.size())) throw SipError("Content-Length does not match body");
  head += kCrlf;
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), env.body.begin(), env.body.end());
  return out;
}

SipEnvelope parse(ByteView bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::size_t blank = text.find("\r\n\r\n");
  if (blank == std::string_view::npos) throw SipError("missing blank line after headers");
  const std::string_view head = text.substr(0, blank);

  std::vector<std::string_view> lines;
  for (std::size_t pos = 0;;) {
    const std::size_t eol = head.find(kCrlf, pos);
    lines.push_back(head.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
    if (eol == std::string_view::npos) break;
    pos = eol + kCrlf.size();
  }

  SipEnvelope env;
  const std::string_view first = lines.front();
  if (first.starts_with(std::string(kVersion) + " ")) {
    const std::string_view rest = first.substr(kVersion.size() + 1);
    int code = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), code);
    if (ec != std::errc() || ptr != rest.data() + 3 || rest.size() < 4 || rest[3] != ' ' || code < 100) {
      throw SipError("malformed status line");
    }
    env.start = StatusLine{code, std::string(rest.substr(4))};
  } else {
    const std::size_t sp1 = first.find(' ');
    const std::size_t sp2 = sp1 == std::string_view::npos ? sp1 : first.find(' ', sp1 + 1);
    if (sp1 == std::string_view::npos || sp2 == std::string_view::npos || sp1 == 0 || sp2 == sp1 + 1 ||
        first.substr(sp2 + 1) != kVersion) {
      throw SipError("malformed request line");
    }
    env.start = RequestLine{std::string(first.substr(0, sp1)), std::string(first.substr(sp1 + 1, sp2 - sp1 - 1))};
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw SipError("malformed header line " + std::to_string(i + 1));
    }
    std::string_view value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    env.headers.push_back({std::string(line.substr(0, colon)), std::string(value)});
  }

  const auto cl = env.header("Content-Length");
  if (!cl) throw SipError("missing Content-Length");
  std::size_t declared = 0;
  auto [ptr, ec] = std::from_chars(cl->data(), cl->data() + cl->size(), declared);
  if (ec != std::errc() || ptr != cl->data() + cl->size()) throw SipError("malformed Content-Length");
  const std::size_t available = bytes.size() - (blank + 4);
  if (declared != available) {
    throw SipError("Content-Length " + std::to_string(declared) + " does not match body of " +
                   std::to_string(available) + " bytes");
  }
  env.body.assign(bytes.begin() + static_cast<std::ptrdiff_t>(blank + 4), bytes.end());
  return env;
}

std::string tel_uri(std::string_view number) { return "<tel:" + std::string(number) + ">"; }

std::optional<std::string> tel_number(std::string_view value) {
  const std::size_t at = value.find("tel:");
  if (at == std::string_view::npos) return std::nullopt;
  const std::size_t start = at + 4;
  std::size_t end = start;
  while (end < value.size() && value[end] != ';' && value[end] != '>' && value[end] != ' ') ++end;
  if (end == start) return std::nullopt;
  return std::string(value.substr(start, end - start));
}

SipEnvelope build_message_request(DeviceProfile& profile, std::string_view from_number, std::string_view recipient,
                                  Bytes body, std::string_view phone_context) {
  if (recipient.empty()) throw SipError("MESSAGE needs a recipient");
  if (from_number.empty()) throw SipError("MESSAGE needs an originating number");
  ++profile.call_id_counter;
  SipEnvelope env;
  env.start = RequestLine{"MESSAGE", "tel:" + std::string(recipient) + ";phone-context=" + std::string(phone_context)};
  env.headers = {
      {"Max-Forwards", "70"},
      {"Route", "<sip:" + bracket(profile.ims_server_address) + ":" + std::to_string(kSipPort) + ";lr>"},
      {"Via", via_for(profile)},
      {"Content-Type", std::string(kSmsContentType)},
      {"From", tel_uri(from_number)},
      {"To", tel_uri(recipient)},
      {"Allow", "MESSAGE"},
      {"P-Preferred-Identity", tel_uri(from_number)},
      {"Request-Disposition", "no-fork"},
      {"Accept-Contact", "*;+g.3gpp.smsip"},
      {"User-Agent", "smsim-ue/1.0"},
      {"CSeq", "1 MESSAGE"},
      {"Call-ID", call_id_for(profile)},
  };
  env.set_body(std::move(body));
  return env;
}

bool validate_message_headers(const SipEnvelope& env, std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (!env.is_method("MESSAGE")) return fail("not a MESSAGE request");
  if (!env.request().request_uri.starts_with("tel:")) return fail("Request-URI is not a tel URI");
  static constexpr std::array<std::string_view, 7> kProfileHeaders = {
      "Route", "Via", "From", "To", "P-Preferred-Identity", "Call-ID", "Content-Length"};
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kFillers = {{
      {"Max-Forwards", "70"},
      {"Content-Type", kSmsContentType},
      {"Allow", "MESSAGE"},
      {"Request-Disposition", "no-fork"},
      {"Accept-Contact", "*;+g.3gpp.smsip"},
      {"User-Agent", "smsim-ue/1.0"},
      {"CSeq", ""},
  }};
  for (std::string_view name : kProfileHeaders) {
    if (env.count(name) != 1) return fail("header " + std::string(name) + " must appear exactly once");
  }
  for (const auto& [name, value] : kFillers) {
    if (env.count(name) != 1) return fail("filler header " + std::string(name) + " must appear exactly once");
    if (!value.empty() && *env.header(name) != value) return fail("filler header " + std::string(name) + " altered");
  }
  if (!tel_number(*env.header("From")) || !tel_number(*env.header("To")) ||
      !tel_number(*env.header("P-Preferred-Identity"))) {
    return fail("identity headers must carry tel URIs");
  }
  if (*env.header("Content-Length") != std::to_string(env.body.size())) return fail("Content-Length mismatch");
  const std::size_t known = kProfileHeaders.size() + kFillers.size() + env.count("Authorization") +
                            env.count(kIntegrityHeader);
  if (env.headers.size() != known) return fail("unexpected extra headers");
  return true;
}

std::string format_challenge(const DigestChallenge& ch) {
  return "Digest realm=\"" + ch.realm + "\", nonce=\"" + ch.nonce + "\", algorithm=" + ch.algorithm_label;
}

DigestChallenge parse_challenge(std::string_view value) {
  const auto params = parse_auth_params(value, "Digest");
  DigestChallenge ch;
  ch.realm = require_param(params, "realm");
  ch.nonce = require_param(params, "nonce");
  ch.algorithm_label = require_param(params, "algorithm");
  return ch;
}

std::string format_credentials(const DigestCredentials& cr) {
  return "Digest username=\"" + cr.username + "\", realm=\"" + cr.realm + "\", nonce=\"" + cr.nonce + "\", uri=\"" +
         cr.uri + "\", response=\"" + cr.response + "\", algorithm=" + cr.algorithm_label;
}

DigestCredentials parse_credentials(std::string_view value) {
  const auto params = parse_auth_params(value, "Digest");
  DigestCredentials cr;
  cr.username = require_param(params, "username");
  cr.realm = require_param(params, "realm");
  cr.nonce = require_param(params, "nonce");
  cr.uri = require_param(params, "uri");
  cr.response = require_param(params, "response");
  cr.algorithm_label = require_param(params, "algorithm");
  return cr;
}

std::string compute_digest_response(ByteView auth_key, const DigestChallenge& challenge, std::string_view method,
                                    std::string_view request_uri) {
  const std::string input =
      to_hex(auth_key) + ":" + challenge.nonce + ":" + std::string(method) + ":" + std::string(request_uri);
  return to_hex(crypto::hash(challenge.algorithm_label, to_bytes(input)));
}

std::string reason_phrase(int code) {
  switch (code) {
    case 200: return "OK";
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 429: return "Too Many Requests";
    case 440: return "User Approval Required";
    default: return "Unknown";
  }
}

SipEnvelope build_response(int code, const std::optional<DigestChallenge>& challenge,
                           const std::optional<std::string>& display_text) {
  if ((code == 401 || code == 440) && !challenge) {
    throw SipError("response " + std::to_string(code) + " requires a digest challenge");
  }
  if (code == 440 && (!display_text || display_text->empty())) throw SipError("response 440 requires display text");
  SipEnvelope env;
  env.start = StatusLine{code, reason_phrase(code)};
  if (challenge) env.headers.push_back({"WWW-Authenticate", format_challenge(*challenge)});
  if (code == 440) env.headers.push_back({std::string(kApprovalHeader), *display_text});
  env.set_body({});
  return env;
}

SipEnvelope respond_to(const SipEnvelope& request, int code, const std::optional<DigestChallenge>& challenge,
                       const std::optional<std::string>& display_text) {
  SipEnvelope resp = build_response(code, challenge, display_text);
  std::vector<Header> echoed;
  for (std::string_view name : {"Via", "From", "To", "Call-ID", "CSeq"}) {
    if (auto v = request.header(name)) echoed.push_back({std::string(name), *v});
  }
  resp.headers.insert(resp.headers.begin(), echoed.begin(), echoed.end());
  return resp;
}

SipEnvelope build_register_request(DeviceProfile& profile, std::string_view realm,
                                   const std::optional<DigestCredentials>& credentials) {
  ++profile.call_id_counter;
  SipEnvelope env;
  env.start = RequestLine{"REGISTER", "sip:" + std::string(realm)};
  env.headers = {
      {"Via", via_for(profile)},
      {"Max-Forwards", "70"},
      {"From", tel_uri(profile.phone_number)},
      {"To", tel_uri(profile.phone_number)},
      {"Call-ID", call_id_for(profile)},
      {"CSeq", std::to_string(profile.call_id_counter) + " REGISTER"},
      {"Contact", "<sip:" + profile.phone_number + "@" + bracket(profile.device_address) + ":" +
                      std::to_string(kSipPort) + ">"},
  };
  if (credentials) env.headers.push_back({"Authorization", format_credentials(*credentials)});
  env.set_body({});
  return env;
}

std::string integrity_tag(ByteView session_key, const SipEnvelope& env) {
  SipEnvelope stripped = env;
  stripped.remove_header(kIntegrityHeader);
  return to_hex(crypto::keyed_hash(crypto::kDefaultHash, session_key, serialize(stripped)));
}

void attach_integrity_tag(ByteView session_key, SipEnvelope& env) {
  env.set_header(kIntegrityHeader, integrity_tag(session_key, env));
}

bool verify_integrity_tag(ByteView session_key, const SipEnvelope& env) {
  const auto tag = env.header(kIntegrityHeader);
  if (!tag) return false;
  const std::string expected = integrity_tag(session_key, env);
  return crypto::equal_tags(to_bytes(*tag), to_bytes(expected));
}

}  // namespace smsim::sip
