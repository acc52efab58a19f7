/*
 Copyright 2026 The horizon-pmp Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "horizon_pmp/cli.hpp"
#include "horizon_pmp/io.hpp"
#include "horizon_pmp/transversality.hpp"

using namespace hpmp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "horizon-pmp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("list") {
    const auto r = cli({"list"});
    CHECK(r.code == kExitOk);
    CHECK(count_lines(r.out) == 4);
    for (const char* name : {"scalar-exp", "halkin", "lq-discounted", "monotone-growth"})
      CHECK(r.out.find(name) != std::string::npos);
    const auto j = cli({"list", "--json"});
    CHECK(j.code == kExitOk);
    CHECK(j.out.find("\"state_dim\": 1") != std::string::npos);
  }

  TEST_CASE("help and usage errors") {
    const auto h = cli({"--help"});
    CHECK(h.code == kExitOk);
    CHECK(h.out.find("adjoint") != std::string::npos);
    CHECK(cli({"check", "--help"}).code == kExitOk);

    const auto bad = cli({"list", "--bogus"});
    CHECK(bad.code == kExitError);
    CHECK(bad.err.find("--bogus") != std::string::npos);
    CHECK(cli({"solve"}).code == kExitError);
    CHECK(cli({"--builtin", "halkin", "--problem", "x.json", "solve"}).code == kExitError);
    CHECK(cli({"--builtin", "nope", "adjoint"}).code == kExitError);
  }

  TEST_CASE("missing problem file") {
    const auto dir = test::scratch("cli-missing");
    const auto r = cli({"--problem", (dir / "absent.json").string(), "--out", dir.string(), "adjoint"});
    CHECK(r.code == kExitError);
    CHECK(r.err.find("absent.json") != std::string::npos);
  }

  TEST_CASE("adjoint on halkin") {
    const auto dir = test::scratch("cli-halkin");
    const auto r = cli({"--builtin", "halkin", "--out", dir.string(), "adjoint"});
    CHECK(r.code == kExitOk);
    const auto table = parse_csv(read_file(dir / "psi_cauchy.csv"));
    CHECK(table.header == std::vector<std::string>{"t", "psi_1"});
    CHECK(table.rows.back()[0] == doctest::Approx(64.0));
    for (const auto& row : table.rows) CHECK(std::abs(row[1] + 0.5) <= 1e-6);
    CHECK(fs::exists(dir / "I_accumulated.csv"));
    CHECK(read_file(dir / "summary.txt").find("converged") != std::string::npos);
  }

  TEST_CASE("adjoint without a limit") {
    const auto dir = test::scratch("cli-diverge");
    const auto doc = save_problem(test::scalar_problem("u1", "x1"), {"1"});
    write_file_atomic(dir / "grow.json", doc);
    const auto r = cli({"--problem", (dir / "grow.json").string(), "--out", dir.string(), "adjoint"});
    CHECK(r.code == kExitNoLimit);
    CHECK_FALSE(fs::exists(dir / "psi_cauchy.csv"));
    CHECK(read_file(dir / "summary.txt").find("diverged") != std::string::npos);
  }

  TEST_CASE("check reads the adjoint artifact") {
    const auto dir = test::scratch("cli-check");
    REQUIRE(cli({"--builtin", "halkin", "--out", dir.string(), "adjoint"}).code == kExitOk);
    const auto r = cli({"--builtin", "halkin", "--out", dir.string(), "check", "--from", dir.string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("trans=fails") != std::string::npos);
    CHECK(r.out.find("lim=holds") != std::string::npos);
    const auto rep = TransversalityReport::parse(read_file(dir / "transversality.txt"));
    CHECK(rep.find("lim")->verdict == Verdict::Holds);
    CHECK(fs::exists(dir / "evidence_trans.csv"));

    const auto w = cli({"--builtin", "halkin", "--out", dir.string(), "check", "--weight", "1"});
    CHECK(w.code == kExitOk);
    CHECK(w.out.find("lim=fails") != std::string::npos);
    CHECK(w.out.find("inconsistency") == std::string::npos);

    const auto bad = test::scratch("cli-corrupt");
    write_file_atomic(bad / "psi_cauchy.csv", "t,psi_1\n0,1\n0.5,oops\n");
    const auto c = cli({"--builtin", "halkin", "--out", bad.string(), "check", "--from", bad.string()});
    CHECK(c.code == kExitError);
    CHECK_FALSE(c.err.empty());
    write_file_atomic(bad / "psi_cauchy.csv", "t,a,b\n0,1,2\n1,1,2\n");
    CHECK(cli({"--builtin", "halkin", "--out", bad.string(), "check", "--from", bad.string()}).code == kExitError);
  }

  TEST_CASE("solve is deterministic for a seed") {
    const auto a = test::scratch("cli-solve-a");
    const auto b = test::scratch("cli-solve-b");
    const auto ra = cli({"--builtin", "halkin", "--seed", "7", "--tau", "5,10", "--out", a.string(), "solve"});
    const auto rb = cli({"--builtin", "halkin", "--seed", "7", "--tau", "5,10", "--out", b.string(), "solve"});
    CHECK(ra.code == kExitOk);
    CHECK(rb.code == kExitOk);
    for (const char* f : {"truncation.csv", "extremal_x.csv", "extremal_psi.csv", "summary.txt"})
      CHECK(read_file(a / f) == read_file(b / f));
    CHECK(cli({"--builtin", "halkin", "--tau", "10,5", "--out", a.string(), "solve"}).code == kExitError);
  }

  TEST_CASE("sweep") {
    const auto dir = test::scratch("cli-sweep");
    const auto r = cli({"--builtin", "scalar-exp", "--tmax", "32", "--out", dir.string(), "sweep"});
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir / "continuity.csv"));
    CHECK(fs::exists(dir / "abnormality.csv"));
    CHECK(cli({"--builtin", "scalar-exp", "--out", dir.string(), "sweep", "--radii", "0.01,0.1"}).code == kExitError);
  }
}
