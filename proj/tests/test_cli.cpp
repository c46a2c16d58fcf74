#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mmfit/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CmdResult {
  int status = -1;
  std::string out, err;
};

// Runs the installed binary with the given arguments, captures both streams.
CmdResult run_cli(const std::string& args) {
  static int seq = 0;
  const std::string base = "/tmp/mmfit_cli_io_" + std::to_string(seq++);
  const std::string cmd =
      std::string(MMFIT_CLI_PATH) + " " + args + " >" + base + ".out 2>" + base + ".err";
  const int rc = std::system(cmd.c_str());
  CmdResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  std::remove((base + ".out").c_str());
  std::remove((base + ".err").c_str());
  return r;
}

// Fresh scratch directory per test case.
std::string work_dir(const std::string& name) {
  const std::string dir = "/tmp/mmfit_cli_" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kQuickRun =
    " --num_results 8 --max_fun_evals 400 --seed 5 --refine_prob 0.5";

}  // namespace

TEST_CASE("help is a success, a bare call is not") {
  CHECK(run_cli("--help").status == 0);
  CHECK(run_cli("calibrate --help").status == 0);
  const CmdResult bare = run_cli("");
  CHECK(bare.status != 0);
}

TEST_CASE("a calibration run writes solutions, trace and manifest") {
  const std::string dir = work_dir("calibrate");
  const CmdResult r = run_cli("calibrate --problem builtin:toy_growth --out " + dir +
                              " --run-id r1" + kQuickRun);
  CHECK(r.status == 0);
  CHECK(r.out.find("wrote") != std::string::npos);
  CHECK(r.out.find("best loss") != std::string::npos);

  REQUIRE(fs::exists(dir + "/r1_solutions.json"));
  REQUIRE(fs::exists(dir + "/r1_trace.ndjson"));
  REQUIRE(fs::exists(dir + "/r1_manifest.json"));

  // the solutions file loads back through the library
  const mmfit::SolutionSet set = mmfit::load_solution_set(dir + "/r1_solutions.json");
  CHECK(set.set_size() == 8);
  CHECK(set.seed == 5);

  // every trace line is one self-contained json object
  std::ifstream trace(dir + "/r1_trace.ndjson");
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) {
    ++lines;
    const ordered_json g = ordered_json::parse(line);
    CHECK(g.contains("generation"));
    CHECK(g.contains("best_loss"));
    CHECK(g.at("pop_size") == 8);
  }
  CHECK(lines > 0);

  const ordered_json manifest = ordered_json::parse(slurp(dir + "/r1_manifest.json"));
  CHECK(manifest.at("run_id") == "r1");
  CHECK(manifest.at("command") == "calibrate");
  CHECK(manifest.at("problem") == "builtin:toy_growth");
  CHECK(manifest.at("outputs").at("solutions") == "r1_solutions.json");
  CHECK(manifest.at("options").at("num_results") == 8);
}

TEST_CASE("a reused run id in the same directory is refused") {
  const std::string dir = work_dir("dup");
  CHECK(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id rr" +
                kQuickRun)
            .status == 0);
  const CmdResult again = run_cli("calibrate --problem builtin:toy_growth --out " + dir +
                                  " --run-id rr" + kQuickRun);
  CHECK(again.status == 1);
  CHECK(again.err.find("already used") != std::string::npos);
}

TEST_CASE("bad inputs exit with code 1 and a named cause") {
  const std::string dir = work_dir("bad");

  const CmdResult missing = run_cli("calibrate --problem /tmp/mmfit_no_such_problem.json --out " +
                                    dir + " --run-id x");
  CHECK(missing.status == 1);
  CHECK(missing.err.find("/tmp/mmfit_no_such_problem.json") != std::string::npos);

  const CmdResult method = run_cli("calibrate --problem builtin:toy_growth --method foo --out " +
                                   dir + " --run-id y");
  CHECK(method.status == 1);
  CHECK(method.err.find("valid: shade, lshade, nm") != std::string::npos);

  const CmdResult builtin = run_cli("calibrate --problem builtin:nope --out " + dir +
                                    " --run-id z");
  CHECK(builtin.status == 1);
  CHECK(builtin.err.find("builtin") != std::string::npos);
}

TEST_CASE("the same seed writes byte-identical solution files") {
  const std::string dir = work_dir("seeded");
  CHECK(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id a" +
                kQuickRun)
            .status == 0);
  CHECK(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id b" +
                kQuickRun + " --threads 4")
            .status == 0);
  const std::string sa = slurp(dir + "/a_solutions.json");
  const std::string sb = slurp(dir + "/b_solutions.json");
  CHECK(!sa.empty());
  CHECK(sa == sb);

  const CmdResult other = run_cli("calibrate --problem builtin:toy_growth --out " + dir +
                                  " --run-id c --num_results 8 --max_fun_evals 400 --seed 6");
  CHECK(other.status == 0);
  CHECK(slurp(dir + "/c_solutions.json") != sa);
}

TEST_CASE("stats renders text and json from a saved run") {
  const std::string dir = work_dir("stats");
  REQUIRE(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id s" +
                  kQuickRun)
              .status == 0);

  const CmdResult text = run_cli("stats --solutions " + dir + "/s_solutions.json");
  CHECK(text.status == 0);
  CHECK(text.out.find("solution set: 8 solutions") != std::string::npos);
  CHECK(text.out.find("parameter w_max") != std::string::npos);

  const CmdResult json = run_cli("stats --solutions " + dir + "/s_solutions.json --json");
  CHECK(json.status == 0);
  const ordered_json doc = ordered_json::parse(json.out);
  CHECK(doc.at("set_size") == 8);
  CHECK(doc.at("parameters").size() == 4);

  CHECK(run_cli("stats --solutions /tmp/mmfit_missing_solutions.json").status == 1);
}

TEST_CASE("chart export writes svg and csv pairs") {
  const std::string dir = work_dir("chart");
  REQUIRE(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id c" +
                  kQuickRun)
              .status == 0);
  const std::string sol = dir + "/c_solutions.json";

  const CmdResult hm = run_cli("chart --solutions " + sol +
                               " --chart density_hm --pair w_max,r --out " + dir +
                               " --run-id c");
  CHECK(hm.status == 0);
  CHECK(fs::exists(dir + "/c_density_hm_w_max-r.svg"));
  CHECK(fs::exists(dir + "/c_density_hm_w_max-r.csv"));

  const CmdResult res = run_cli("chart --solutions " + sol +
                                " --chart results --plot set --out " + dir + " --run-id c");
  CHECK(res.status == 0);
  CHECK(fs::exists(dir + "/c_results_set.svg"));
  CHECK(fs::exists(dir + "/c_results_set.csv"));

  // validation: missing/invalid selector arguments
  CHECK(run_cli("chart --solutions " + sol + " --chart density_hm --out " + dir +
                " --run-id v1")
            .status == 1);
  CHECK(run_cli("chart --solutions " + sol + " --chart results --plot nope --out " + dir +
                " --run-id v2")
            .status == 1);
  CHECK(run_cli("chart --solutions " + sol + " --chart wat --pair w_max,r --out " + dir +
                " --run-id v3")
            .status == 1);
  const CmdResult pair = run_cli("chart --solutions " + sol +
                                 " --chart scatter --pair w_max --out " + dir + " --run-id v4");
  CHECK(pair.status == 1);
  CHECK(pair.err.find("--pair A,B") != std::string::npos);
}

TEST_CASE("continuation picks up a saved run") {
  const std::string dir = work_dir("continue");
  REQUIRE(run_cli("calibrate --problem builtin:toy_growth --out " + dir + " --run-id base" +
                  kQuickRun)
              .status == 0);
  const std::string sol = dir + "/base_solutions.json";

  const CmdResult best = run_cli("continue --from " + sol + " --select best --out " + dir +
                                 " --run-id next" + kQuickRun);
  CHECK(best.status == 0);
  CHECK(fs::exists(dir + "/next_solutions.json"));
  const ordered_json manifest = ordered_json::parse(slurp(dir + "/next_manifest.json"));
  CHECK(manifest.at("command") == "continue");
  CHECK(manifest.at("prior_run") == sol);

  CHECK(run_cli("continue --from " + sol + " --select 0,2 --out " + dir + " --run-id multi" +
                kQuickRun)
            .status == 0);

  const CmdResult oob = run_cli("continue --from " + sol + " --select 99 --out " + dir +
                                " --run-id far" + kQuickRun);
  CHECK(oob.status == 1);
  CHECK(oob.err.find("out of range") != std::string::npos);

  const CmdResult garbled = run_cli("continue --from " + sol + " --select a,b --out " + dir +
                                    " --run-id bad" + kQuickRun);
  CHECK(garbled.status == 1);
  CHECK(garbled.err.find("invalid selection") != std::string::npos);
}

TEST_CASE("the comparison harness emits its csv and summary") {
  const std::string dir = work_dir("compare");

  const CmdResult tiny = run_cli("compare --problem builtin:toy_growth --budget 999 --out " +
                                 dir);
  CHECK(tiny.status == 1);
  CHECK(tiny.err.find("at least 1000") != std::string::npos);

  const CmdResult r = run_cli("compare --problem builtin:toy_growth --budget 1000 --seeds 2 "
                              "--seed 3 --out " +
                              dir);
  CHECK(r.status == 0);
  CHECK(r.out.find("shade best <= nm best in") != std::string::npos);

  const std::string csv = slurp(dir + "/comparison.csv");
  CHECK(csv.rfind("seed,nm_best,shade_best,shade_mean,nm_mre,nm_smse,shade_mre,shade_smse,"
                  "improvement\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 seeds

  const ordered_json summary = ordered_json::parse(slurp(dir + "/summary.json"));
  CHECK(summary.at("problem") == "builtin:toy_growth");
  CHECK(summary.at("budget") == 1000);
  CHECK(summary.at("seeds") == 2);
  CHECK(summary.at("runs").size() == 2);
  CHECK(summary.at("runs")[0].at("seed") == 3);
  CHECK(summary.at("runs")[0].at("nm_set_size") == 1);
  CHECK(summary.at("runs")[0].at("shade_set_size").get<std::size_t>() > 1);
  CHECK(summary.contains("shade_best_le_nm_count"));
}
