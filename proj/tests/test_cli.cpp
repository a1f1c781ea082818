#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SMSIM_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

TEST(Cli, ListScenarios) {
  const auto r = run("list-scenarios");
  EXPECT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int lines = 0;
  bool donation = false;
  while (std::getline(in, line)) {
    ++lines;
    donation = donation || line.rfind("donation ", 0) == 0;
  }
  EXPECT_EQ(lines, 11);
  EXPECT_TRUE(donation);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("run --config /nonexistent.json").code, 2);
  EXPECT_EQ(run("run --config " + temp_file("noseed.json", R"({"scenario": "donation"})")).code, 2);
  EXPECT_EQ(run("run --config " + temp_file("broken.json", "{not json")).code, 2);
  EXPECT_EQ(run("run --scenario nope").code, 2);
  EXPECT_EQ(run("run").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, FailedVerdictExitsOne) {
  const std::string cfg = temp_file("wrong_reference.json", R"({"scenario": "rate_measure", "seed": 3,
      "params": {"reference_raw_count": 5000}})");
  const auto r = run("run --config " + cfg);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL raw path unthrottled count"), std::string::npos);
}

TEST(Cli, RunIsReproducibleAcrossProcesses) {
  const auto a = run("run --scenario facebook_individual --format structured");
  const auto b = run("run --scenario facebook_individual --format structured");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j.at("scenario"), "facebook_individual");
  EXPECT_TRUE(j.at("passed").get<bool>());
}

TEST(Cli, ReportToFile) {
  const std::string path = ::testing::TempDir() + "report.json";
  const auto r = run("run --scenario like_farm --format structured --out " + path);
  EXPECT_EQ(r.code, 0);
  std::ifstream in(path);
  EXPECT_EQ(nlohmann::json::parse(in).at("scenario"), "like_farm");
}

TEST(Cli, SmsEncodeDecode) {
  const auto enc = run("codec sms encode --dest 32665 --text yyyy8");
  EXPECT_EQ(enc.code, 0);
  EXPECT_EQ(enc.out, "00000210020404014c9994080d00032000000106102f9f3e7cb8\n");
  const auto dec = run("codec sms decode 00000210020404014c9994080d00031000000106102f9f3e7cb8");
  ASSERT_EQ(dec.code, 0);
  const auto j = nlohmann::json::parse(dec.out);
  EXPECT_EQ(j.at("dest"), "32665");
  EXPECT_EQ(j.at("text"), "yyyy8");
  EXPECT_EQ(j.at("kind"), "Deliver");
  const auto hex = run("codec sms encode --dest 32665 --orig 3105554347 --text Hi").out;
  const auto deliver = nlohmann::json::parse(run("codec sms decode " + hex).out);
  EXPECT_EQ(deliver.at("orig"), "3105554347");
  EXPECT_EQ(run("codec sms decode 0000").code, 2);
}

TEST(Cli, SipBuildThenParse) {
  const auto built = run("codec sip build-message --from 3105554347 --to 32665 --text Hi");
  ASSERT_EQ(built.code, 0);
  const auto parsed = run("codec sip parse " + temp_file("msg.sip", built.out));
  ASSERT_EQ(parsed.code, 0);
  const auto j = nlohmann::json::parse(parsed.out);
  EXPECT_EQ(j.at("method"), "MESSAGE");
  EXPECT_EQ(j.at("sms").at("text"), "Hi");
  EXPECT_EQ(j.at("sms").at("dest"), "32665");
}

}  // namespace
