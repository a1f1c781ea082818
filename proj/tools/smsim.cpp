#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smsim/report.hpp"
#include "smsim/scenario.hpp"
#include "smsim/sip_codec.hpp"
#include "smsim/sms_codec.hpp"

namespace {

using nlohmann::json;
using namespace smsim;

constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json pdu_to_json(const sms::SmsPdu& p) {
  json j = {{"teleservice", p.teleservice_id},
            {"dest", p.dest.digits},
            {"kind", p.bearer.kind == sms::MessageKind::Deliver ? "Deliver" : "Submit"},
            {"message_id", p.bearer.message_id},
            {"encoding", static_cast<int>(p.bearer.user_data.encoding)},
            {"num_fields", p.bearer.user_data.num_fields()}};
  if (p.orig) j["orig"] = p.orig->digits;
  if (p.bearer.user_data.encoding == sms::Encoding::SevenBitAscii) {
    j["text"] = p.bearer.user_data.text();
  } else {
    j["payload_hex"] = to_hex(p.bearer.user_data.payload);
  }
  return j;
}

int run_command(const std::string& config_path, const std::string& scenario_name, const std::string& out_path,
                const std::string& format_name, bool verbose) {
  report::Format format;
  scenario::ScenarioConfig config;
  try {
    format = report::parse_format(format_name);
    config = config_path.empty() ? scenario::default_config(scenario_name) : scenario::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  report::SimReport r;
  try {
    r = scenario::run_scenario(config);
  } catch (const scenario::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (out_path.empty()) {
    report::emit_report(r, format, std::cout, verbose);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_path << '\n';
      return kExitConfig;
    }
    report::emit_report(r, format, out, verbose);
    std::cout << r.scenario << ": " << (r.passed() ? "PASS" : "FAIL") << " (report written to " << out_path << ")\n";
  }
  return r.passed() ? 0 : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spoofed SMS-over-IMS simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario_name;
  std::string out_path;
  std::string format_name = "text";
  bool verbose = false;
  auto* run = app.add_subcommand("run", "run a scenario and print its report");
  auto* config_opt = run->add_option("--config", config_path, "scenario configuration (JSON)");
  run->add_option("--scenario", scenario_name, "run a named scenario with its defaults")->excludes(config_opt);
  run->add_option("--out", out_path, "write the report here instead of stdout");
  run->add_option("--format", format_name, "text or structured")->check(CLI::IsMember({"text", "structured"}));
  run->add_flag("--verbose", verbose, "include the event log in text reports");

  auto* list = app.add_subcommand("list-scenarios", "list scenario names");

  auto* codec = app.add_subcommand("codec", "encode and decode single messages");
  codec->require_subcommand(1);
  auto* sms_cmd = codec->add_subcommand("sms", "SMS transport-layer PDUs");
  sms_cmd->require_subcommand(1);
  std::string dest, orig, text, hex;
  auto* sms_encode = sms_cmd->add_subcommand("encode", "print the hex PDU");
  sms_encode->add_option("--dest", dest, "destination digits")->required();
  sms_encode->add_option("--orig", orig, "originating digits (makes a Deliver)");
  sms_encode->add_option("--text", text, "7-bit ASCII text")->required();
  auto* sms_decode = sms_cmd->add_subcommand("decode", "print PDU fields as JSON");
  sms_decode->add_option("hex", hex, "hex PDU")->required();

  auto* sip_cmd = codec->add_subcommand("sip", "SIP MESSAGE requests");
  sip_cmd->require_subcommand(1);
  std::string from, to, device_address = "2001:db8:1:100::1", ims_address = "2001:db8:1:fe03:fa:104:0:5";
  std::string input_path;
  auto* sip_build = sip_cmd->add_subcommand("build-message", "print a MESSAGE carrying one SMS");
  sip_build->add_option("--from", from, "From number")->required();
  sip_build->add_option("--to", to, "recipient number or short code")->required();
  sip_build->add_option("--text", text, "message text")->required();
  sip_build->add_option("--device-address", device_address);
  sip_build->add_option("--ims-address", ims_address);
  auto* sip_parse = sip_cmd->add_subcommand("parse", "print a SIP message as JSON");
  sip_parse->add_option("file", input_path, "file with the raw message; stdin when absent or -");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      if (config_path.empty() && scenario_name.empty()) {
        std::cerr << "run needs --config or --scenario\n";
        return kExitConfig;
      }
      return run_command(config_path, scenario_name, out_path, format_name, verbose);
    }
    if (list->parsed()) {
      for (const auto& s : scenario::scenario_catalog()) std::cout << s.name << "  " << s.description << '\n';
      return 0;
    }
    if (sms_encode->parsed()) {
      const auto ud = sms::UserData::ascii(text);
      const auto pdu = orig.empty() ? sms::make_submit(dest, ud) : sms::make_deliver(orig, dest, ud);
      std::cout << to_hex(sms::encode_pdu(pdu)) << '\n';
      return 0;
    }
    if (sms_decode->parsed()) {
      std::cout << pdu_to_json(sms::decode_pdu(from_hex(hex))).dump(2) << '\n';
      return 0;
    }
    if (sip_build->parsed()) {
      sip::DeviceProfile profile{from, device_address, ims_address, {}, 0};
      const auto pdu = sms::make_submit(to, sms::UserData::ascii(text));
      const auto env = sip::build_message_request(profile, from, to, sms::encode_pdu(pdu));
      const Bytes wire = sip::serialize(env);
      std::cout << std::string(wire.begin(), wire.end());
      return 0;
    }
    if (sip_parse->parsed()) {
      const std::string raw = read_input(input_path);
      const auto env = sip::parse(to_bytes(raw));
      json j;
      if (env.is_request()) {
        j["method"] = env.request().method;
        j["request_uri"] = env.request().request_uri;
      } else {
        j["status"] = env.status().code;
        j["reason"] = env.status().reason;
      }
      json headers = json::array();
      for (const auto& h : env.headers) headers.push_back({h.name, h.value});
      j["headers"] = headers;
      try {
        j["sms"] = pdu_to_json(sms::decode_pdu(env.body));
      } catch (const sms::CodecError&) {
        j["body_hex"] = to_hex(env.body);
      }
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
