#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "testutil.hpp"

using testutil::LocalChatServer;
using testutil::TempDir;

#ifndef TEMPAMB_CLI_PATH
#error "TEMPAMB_CLI_PATH must point at the tempamb binary"
#endif

namespace {

struct CmdResult {
  int status = -1;
  std::string out;
};

// Runs a shell command, capturing stdout (append 2>&1 to fold in stderr).
CmdResult run_cmd(const std::string& args) {
  const std::string cmd = std::string(TEMPAMB_CLI_PATH) + " " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int rc = pclose(pipe);
  CmdResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = out;
  return r;
}

std::string q(const std::string& path) { return "'" + path + "'"; }

std::string classify_synthetic(const TempDir& tmp, const std::string& extra,
                               const std::string& out_name) {
  auto out = tmp.file(out_name);
  auto r = run_cmd("classify --dataset " + q(testutil::data_path("trio.jsonl")) +
                   " --oracle synthetic --world " +
                   q(testutil::data_path("trio_world.json")) + " --output " + q(out) + " " +
                   extra + " 2>/dev/null");
  REQUIRE(r.status == 0);
  return out;
}

}  // namespace

TEST_CASE("version flag") {
  auto r = run_cmd("--version");
  CHECK(r.status == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("help lists the subcommands") {
  auto r = run_cmd("--help");
  CHECK(r.status == 0);
  for (const char* sub : {"classify", "evaluate", "stats", "efficiency", "cache"}) {
    CHECK(r.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("stats reports the fixture composition") {
  auto r = run_cmd("stats --dataset " + q(testutil::data_path("fixture10.jsonl")));
  CHECK(r.status == 0);
  CHECK(r.out.find("10") != std::string::npos);
  CHECK(r.out.find("7.30") != std::string::npos);

  TempDir tmp;
  auto json_path = tmp.file("stats.json");
  auto rj = run_cmd("stats --dataset " + q(testutil::data_path("fixture10.jsonl")) +
                    " --json " + q(json_path));
  CHECK(rj.status == 0);
  auto j = nlohmann::json::parse(testutil::read_file(json_path));
  CHECK(j.at("version").get<std::string>() == "0.1.0");
  CHECK(j.at("stats").at("total").get<int>() == 10);
  CHECK(j.at("stats").at("ambiguous").get<int>() == 6);
  CHECK(j.at("stats").at("unambiguous").get<int>() == 4);
  CHECK(j.at("stats").at("avg_question_length_words").get<double>() ==
        doctest::Approx(7.3));
}

TEST_CASE("classify writes meta plus one row per question") {
  TempDir tmp;
  auto out = classify_synthetic(tmp, "--strategy skip:2", "out.jsonl");

  std::istringstream in(testutil::read_file(out));
  std::string line;
  REQUIRE(std::getline(in, line));
  auto meta = nlohmann::json::parse(line);
  CHECK(meta.at("meta").at("config").at("strategy").get<std::string>() == "skip:2");

  REQUIRE(std::getline(in, line));
  auto nba = nlohmann::json::parse(line);
  CHECK(nba.at("question_id").get<std::string>() == "nba");
  CHECK(nba.at("predicted").get<std::string>() == "ambiguous");
  CHECK(nba.at("comparisons").get<int>() == 11);
  CHECK(nba.at("witness")[0].get<int>() == 2000);
  CHECK(nba.at("witness")[1].get<int>() == 2022);

  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("classify can stream rows to stdout") {
  TempDir tmp;
  auto r = run_cmd("classify --dataset " + q(testutil::data_path("trio.jsonl")) +
                   " --oracle synthetic --world " +
                   q(testutil::data_path("trio_world.json")) + " --output - 2>/dev/null");
  CHECK(r.status == 0);
  std::istringstream in(r.out);
  std::string line;
  int lines = 0;
  bool meta_first = false;
  while (std::getline(in, line)) {
    if (lines == 0) meta_first = nlohmann::json::parse(line).contains("meta");
    ++lines;
  }
  CHECK(lines == 4);
  CHECK(meta_first);
}

TEST_CASE("rerunning the same classify command resumes") {
  TempDir tmp;
  auto out = classify_synthetic(tmp, "", "out.jsonl");
  auto before = testutil::read_file(out);

  auto r = run_cmd("classify --dataset " + q(testutil::data_path("trio.jsonl")) +
                   " --oracle synthetic --world " +
                   q(testutil::data_path("trio_world.json")) + " --output " + q(out) +
                   " 2>&1");
  CHECK(r.status == 0);
  CHECK(r.out.find("3 resumed of 3") != std::string::npos);
  CHECK(testutil::read_file(out) == before);
}

TEST_CASE("evaluate scores a classify output file") {
  TempDir tmp;
  auto out = classify_synthetic(tmp, "", "out.jsonl");
  auto json_path = tmp.file("report.json");
  auto r = run_cmd("evaluate --pred " + q(out) + " --gold " +
                   q(testutil::data_path("trio.jsonl")) + " --json " + q(json_path));
  CHECK(r.status == 0);
  CHECK(r.out.find("1.000") != std::string::npos);

  auto j = nlohmann::json::parse(testutil::read_file(json_path));
  CHECK(j.at("metrics").at("tp").get<int>() == 1);
  CHECK(j.at("metrics").at("tn").get<int>() == 2);
  CHECK(j.at("metrics").at("f1").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("efficiency tabulates strategy costs") {
  TempDir tmp;
  auto json_path = tmp.file("eff.json");
  auto r = run_cmd("efficiency --worlds 100 --seed 7 --strategies linear,skip:2 --json " +
                   q(json_path));
  CHECK(r.status == 0);
  CHECK(r.out.find("linear") != std::string::npos);
  CHECK(r.out.find("skip:2") != std::string::npos);

  auto j = nlohmann::json::parse(testutil::read_file(json_path));
  CHECK(j.at("worlds").get<int>() == 100);
  REQUIRE(j.at("entries").size() == 2);
  CHECK(j.at("entries")[0].at("strategy").get<std::string>() == "linear");
  CHECK(j.at("entries")[0].at("worst_case").get<int>() == 24);

  auto serial_path = tmp.file("eff_serial.json");
  auto rs = run_cmd("efficiency --worlds 100 --seed 7 --strategies linear,skip:2 --serial"
                    " --json " + q(serial_path));
  CHECK(rs.status == 0);
  auto js = nlohmann::json::parse(testutil::read_file(serial_path));
  for (int i = 0; i < 2; ++i) {
    CHECK(j.at("entries")[i].at("mean_comparisons").get<double>() ==
          js.at("entries")[i].at("mean_comparisons").get<double>());
    CHECK(j.at("entries")[i].at("stddev_comparisons").get<double>() ==
          js.at("entries")[i].at("stddev_comparisons").get<double>());
  }
}

TEST_CASE("cache inspect and clear") {
  TempDir tmp;
  auto cache = tmp.file("cache.jsonl");
  classify_synthetic(tmp, "--cache " + q(cache), "out.jsonl");

  auto inspect = run_cmd("cache inspect --cache " + q(cache));
  CHECK(inspect.status == 0);
  CHECK(inspect.out.find("Records") != std::string::npos);
  CHECK(inspect.out.find("synthetic|-|t=0") != std::string::npos);
  CHECK(inspect.out.find("Records     0\n") == std::string::npos);

  auto clear = run_cmd("cache clear --cache " + q(cache));
  CHECK(clear.status == 0);

  auto after = run_cmd("cache inspect --cache " + q(cache));
  CHECK(after.out.find("Records     0") != std::string::npos);
}

TEST_CASE("config files provide defaults and flags win") {
  TempDir tmp;
  nlohmann::ordered_json cfg;
  cfg["dataset"] = testutil::data_path("trio.jsonl");
  cfg["strategy"] = "skip:2";
  cfg["oracle"] = {{"kind", "synthetic"},
                   {"world_path", testutil::data_path("trio_world.json")}};
  cfg["output"] = tmp.file("from_config.jsonl");
  auto cfg_path = tmp.file("run.json");
  testutil::write_file(cfg_path, cfg.dump(2) + "\n");

  auto r = run_cmd("classify --config " + q(cfg_path) + " 2>/dev/null");
  CHECK(r.status == 0);
  std::istringstream in(testutil::read_file(tmp.file("from_config.jsonl")));
  std::string line;
  std::getline(in, line);  // meta
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line).at("comparisons").get<int>() == 11);

  auto out2 = tmp.file("flag_wins.jsonl");
  auto r2 = run_cmd("classify --config " + q(cfg_path) + " --strategy linear --output " +
                    q(out2) + " 2>/dev/null");
  CHECK(r2.status == 0);
  std::istringstream in2(testutil::read_file(out2));
  std::getline(in2, line);  // meta
  std::getline(in2, line);
  CHECK(nlohmann::json::parse(line).at("comparisons").get<int>() == 22);
}

TEST_CASE("usage errors exit with status 1") {
  CHECK(run_cmd("evaluate 2>&1").status == 1);
  CHECK(run_cmd("stats 2>&1").status == 1);
  CHECK(run_cmd("calcify 2>&1").status == 1);
  CHECK(run_cmd("stats --dataset missing.jsonl --no-such-flag 2>&1").status == 1);
  CHECK(run_cmd("classify --dataset missing.jsonl --oracle synthetic 2>&1").status == 1);
  CHECK(run_cmd("efficiency --strategies zero-shot 2>&1").status == 1);

  TempDir tmp;
  auto empty = tmp.file("empty.jsonl");
  testutil::write_file(empty, "");
  auto r = run_cmd("stats --dataset " + q(empty) + " 2>&1");
  CHECK(r.status == 1);
  CHECK(r.out.find("error:") != std::string::npos);
}

TEST_CASE("partial endpoint failures exit with status 2") {
  TempDir tmp;
  LocalChatServer server([](const std::string& content) {
    if (content.find("oldest team in the nba") != std::string::npos) {
      return std::make_pair(404, std::string("refused"));
    }
    return std::make_pair(200, LocalChatServer::chat_body("Yes"));
  });
  auto out = tmp.file("partial.jsonl");
  auto r = run_cmd("classify --dataset " + q(testutil::data_path("trio.jsonl")) +
                   " --oracle chat --endpoint " + q(server.url()) +
                   " --model local-test --max-retries 0 --output " + q(out) + " 2>&1");
  CHECK(r.status == 2);
  CHECK(r.out.find("1 failed") != std::string::npos);

  auto report = run_cmd("evaluate --pred " + q(out) + " --gold " +
                        q(testutil::data_path("trio.jsonl")));
  CHECK(report.status == 0);
  CHECK(report.out.find("Failed") != std::string::npos);
}
