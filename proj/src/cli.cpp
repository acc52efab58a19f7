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

#include "horizon_pmp/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "horizon_pmp/cauchy.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/io.hpp"
#include "horizon_pmp/pmp.hpp"
#include "horizon_pmp/transversality.hpp"

namespace hpmp {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string problem_path;
  std::string builtin_name;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  double atol = OdeOptions{}.atol;
  double rtol = OdeOptions{}.rtol;
  std::string tau;
  double t_max = 128.0;
  double tol_conv = 1e-6;
  // command-specific
  bool json = false;
  std::string from_dir;
  std::string weight;  // ';'-separated row-major entries over t
  std::string radii = "0.1,0.01,0.001";

  [[nodiscard]] OdeOptions ode() const {
    OdeOptions o;
    o.atol = atol;
    o.rtol = rtol;
    return o;
  }
};

struct Loaded {
  ControlProblem problem;
  ReferenceControl reference;
  std::string label;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, end - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: '{}' is not a number", what, item));
    }
    pos = end + 1;
  }
  return out;
}

std::vector<double> parse_taus(const std::string& text) {
  auto taus = parse_list(text, "--tau");
  for (std::size_t i = 0; i < taus.size(); ++i)
    if (!(taus[i] > 0.0) || (i > 0 && !(taus[i] > taus[i - 1])))
      throw ConfigError("--tau must be positive and strictly increasing");
  return taus;
}

void check_config(const RunConfig& c) {
  if (!(c.atol > 0.0) || !(c.rtol > 0.0) || !(c.tol_conv > 0.0))
    throw ConfigError("tolerances must be positive");
  if (!(c.t_max > 0.0)) throw ConfigError("--tmax must be positive");
}

Loaded load(const RunConfig& c) {
  if (!c.builtin_name.empty()) {
    auto b = benchmark(c.builtin_name);
    return {std::move(b.problem), std::move(b.reference), b.name};
  }
  if (c.problem_path.empty()) throw ConfigError("one of --problem or --builtin is required");
  auto doc = load_document(read_file(c.problem_path));
  if (!doc.reference) throw ConfigError(fmt::format("{}: problem has no reference control", c.problem_path));
  std::string label = doc.problem.label().empty() ? c.problem_path : doc.problem.label();
  return {std::move(doc.problem), std::move(*doc.reference), std::move(label)};
}

fs::path out_path(const RunConfig& c, const char* name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  return join(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

std::string header(const RunConfig& c, const Loaded& l, const char* command) {
  return fmt::format("command = {}\nproblem = {}\nseed = {}\natol = {}\nrtol = {}\n", command, l.label, c.seed,
                     fmt17(c.atol), fmt17(c.rtol));
}

// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const auto l = load(c);
  const auto taus = parse_taus(c.tau.empty() ? "5,10,20,40" : c.tau);
  TruncationOptions opts;
  opts.seed = c.seed;
  opts.sweep.ode = c.ode();
  const auto run = run_truncation(l.problem, l.reference, taus, opts);
  const auto m = l.problem.state_dim();

  write_file_atomic(out_path(c, "truncation.csv"), to_csv(run, m));
  const auto* last = run.final_step();
  if (last) {
    write_file_atomic(out_path(c, "extremal_x.csv"), to_csv(last->extremal.x, "x_"));
    write_file_atomic(out_path(c, "extremal_psi.csv"), to_csv(last->extremal.psi, "psi_"));
  }

  std::string s = header(c, l, "solve");
  s += fmt::format("tau = {}\npool_size = {}\n", join(taus), run.omega.pool_size);
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    const auto& st = run.steps[i];
    if (!st.error.empty()) {
      s += fmt::format("step {}: tau = {} failed: {}\n", i + 1, fmt17(st.tau), st.error);
      continue;
    }
    s += fmt::format("step {}: tau = {} gamma = {} lambda = {} psi0 = {} residual = {} converged = {}\n", i + 1,
                     fmt17(st.tau), fmt17(st.gamma), fmt17(st.extremal.lambda), join(st.extremal.psi(0.0)),
                     fmt17(st.extremal.max_residual), st.extremal.converged);
  }
  if (last) {
    s += fmt::format("lambda_final = {}\npsi0_final = {}\n", fmt17(last->extremal.lambda),
                     join(last->extremal.psi(0.0)));
  }
  const bool ok = run.all_converged() && last;
  s += fmt::format("status = {}\n", ok ? "converged" : "not converged");
  write_file_atomic(out_path(c, "summary.txt"), s);
  if (last) out << fmt::format("lambda = {:.10g}, psi(0) = {}\n", last->extremal.lambda, join(last->extremal.psi(0.0)));
  out << (ok ? "all truncation steps converged\n" : "some truncation steps did not converge\n");
  return ok ? kExitOk : kExitNotConverged;
}

int cmd_adjoint(const RunConfig& c, std::ostream& out) {
  const auto l = load(c);
  const auto m = static_cast<Eigen::Index>(l.problem.state_dim());
  const auto acc = accumulate(l.problem, l.reference, Vector::Zero(m), c.t_max, c.ode());
  const auto v = classify_convergence(acc, c.tol_conv);
  write_file_atomic(out_path(c, "I_accumulated.csv"), to_csv(acc));

  std::string s = header(c, l, "adjoint");
  s += fmt::format("t_max = {}\ntol_conv = {}\nverdict = {}\ngrowth_exponent = {}\n", fmt17(c.t_max),
                   fmt17(c.tol_conv), to_string(v.kind), fmt17(v.growth_exponent));
  s += "windows\nwindow_end,oscillation,window_max\n";
  for (std::size_t i = 0; i < v.window_end.size(); ++i)
    s += fmt::format("{},{},{}\n", fmt17(v.window_end[i]), fmt17(v.oscillation[i]), fmt17(v.window_max[i]));
  s += "end\n";

  if (v.kind == ConvergenceVerdict::Kind::Converged) {
    const auto ca = cauchy_adjoint(l.problem, l.reference, acc, v, c.t_max / 2);
    write_file_atomic(out_path(c, "psi_cauchy.csv"), to_csv(ca.psi, "psi_"));
    s += fmt::format("I_star = {}\nlambda = {}\npsi0 = {}\nterminal_condition = {}\n", join(v.limit.transpose()),
                     fmt17(ca.lambda), join(ca.psi(0.0)), fmt17(ca.terminal_condition));
    out << fmt::format("converged: I_* = {}, lambda = {:.10g}\n", join(v.limit.transpose()), ca.lambda);
  } else {
    for (const auto& cl : v.clusters) s += "cluster = " + join(cl.transpose()) + '\n';
    out << fmt::format("{}: no Cauchy adjoint written\n", to_string(v.kind));
  }
  write_file_atomic(out_path(c, "summary.txt"), s);
  return v.kind == ConvergenceVerdict::Kind::Converged ? kExitOk : kExitNoLimit;
}

// psi_cauchy.csv back into an arc; slopes by finite differences.
AdjointArc read_adjoint(const fs::path& path, std::size_t m) {
  if (!fs::exists(path)) throw ConfigError(fmt::format("missing artifact {}", path.string()));
  const auto table = parse_csv(read_file(path));
  if (table.header.size() != m + 1 || table.header.front() != "t")
    throw ConfigError(fmt::format("{}: expected columns t and {} adjoint components", path.string(), m));
  if (table.rows.size() < 2) throw ConfigError(fmt::format("{}: fewer than two rows", path.string()));
  DenseSolution sol;
  for (const auto& r : table.rows) {
    if (!sol.t.empty() && !(r[0] > sol.t.back()))
      throw ConfigError(fmt::format("{}: times not strictly increasing", path.string()));
    for (double v : r)
      if (!std::isfinite(v)) throw ConfigError(fmt::format("{}: non-finite entry", path.string()));
    sol.t.push_back(r[0]);
    sol.y.push_back(Eigen::Map<const Vector>(r.data() + 1, static_cast<Eigen::Index>(m)));
  }
  const auto n = sol.t.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
    sol.dleft.push_back((sol.y[b] - sol.y[a]) / (sol.t[b] - sol.t[a]));
  }
  sol.dright = sol.dleft;
  return AdjointArc(std::move(sol));
}

int cmd_check(const RunConfig& c, std::ostream& out) {
  const auto l = load(c);
  PrepareOptions po;
  po.t_max = c.t_max;
  po.t_psi = c.t_max / 2;
  po.tol_conv = c.tol_conv;
  po.seed = c.seed;
  po.ode = c.ode();
  std::optional<AdjointArc> psi;
  if (!c.from_dir.empty()) {
    psi = read_adjoint(fs::path(c.from_dir) / "psi_cauchy.csv", l.problem.state_dim());
    if (psi->span().end > c.t_max)
      throw ConfigError(fmt::format("adjoint artifact reaches t={:.6g} beyond --tmax", psi->span().end));
  }
  auto input = prepare_battery(l.problem, l.reference, po, psi);
  if (!c.weight.empty()) {
    std::vector<std::string> entries;
    std::string_view rest = c.weight;
    for (std::size_t pos; (pos = rest.find(';')) != std::string_view::npos; rest.remove_prefix(pos + 1))
      entries.emplace_back(rest.substr(0, pos));
    entries.emplace_back(rest);
    input.a = weight_from_expressions(l.problem.state_dim(), entries, {0.0, c.t_max});
    input.a_is_fundamental = false;
    input.notes.push_back(fmt::format("weight A(t) = [{}] in place of the fundamental matrix", c.weight));
  }
  BatteryOptions bo;
  bo.tol = c.tol_conv;
  const auto rep = run_battery(l.problem, input, bo);

  write_file_atomic(out_path(c, "transversality.txt"), rep.serialize());
  for (const auto& e : rep.entries) {
    std::string csv;
    for (std::size_t i = 0; i < e.evidence.columns.size(); ++i) csv += (i ? "," : "") + e.evidence.columns[i];
    csv += '\n';
    for (const auto& r : e.evidence.rows) csv += join(r) + '\n';
    write_file_atomic(out_path(c, fmt::format("evidence_{}.csv", e.id).c_str()), csv);
  }
  out << rep.summary_line() << '\n';
  for (const auto& n : rep.notes) out << "note: " << n << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto l = load(c);
  const auto m = static_cast<Eigen::Index>(l.problem.state_dim());
  const auto radii = parse_list(c.radii, "--radii");
  std::vector<Vector> dirs;
  for (Eigen::Index i = 0; i < m; ++i)
    for (double sgn : {1.0, -1.0}) dirs.push_back(sgn * Vector::Unit(m, i));
  const auto probe = continuity_probe(l.problem, l.reference, radii, dirs, c.t_max, c.ode());

  std::vector<double> taus;
  if (!c.tau.empty()) {
    taus = parse_taus(c.tau);
  } else {
    for (double t = 1.0; t <= c.t_max; t *= 2.0) taus.push_back(t);
  }
  const auto ab = abnormality_indicator(l.problem, l.reference, radii, taus, c.ode());

  std::string cont = "radius,direction";
  for (Eigen::Index i = 1; i <= m; ++i) cont += fmt::format(",xi_{}", i);
  cont += ",sup_difference,ok\n";
  for (const auto& r : probe.rows)
    cont += fmt::format("{},{},{},{},{}\n", fmt17(r.radius), r.direction, join(r.xi), fmt17(r.sup_difference),
                        r.error.empty() ? 1 : 0);
  write_file_atomic(out_path(c, "continuity.csv"), cont);
  std::string abn = "tau,sup_norm\n";
  for (std::size_t i = 0; i < ab.taus.size(); ++i) abn += fmt::format("{},{}\n", fmt17(ab.taus[i]), fmt17(ab.sup_norm[i]));
  write_file_atomic(out_path(c, "abnormality.csv"), abn);

  std::string s = header(c, l, "sweep");
  s += fmt::format("t_max = {}\nradii = {}\ncontinuity_decreasing = {}\nmodulus_exponent = {}\nmodulus_constant = {}\n",
                   fmt17(c.t_max), join(radii), probe.decreasing, fmt17(probe.modulus_exponent),
                   fmt17(probe.modulus_constant));
  for (const auto& r : probe.rows)
    if (!r.error.empty()) s += fmt::format("failed radius {} direction {}: {}\n", fmt17(r.radius), r.direction, r.error);
  s += fmt::format("abnormality_excluded = {}\nabnormality_growth_exponent = {}\nabnormality_message = {}\n",
                   ab.excluded, fmt17(ab.growth_exponent), ab.message);
  write_file_atomic(out_path(c, "summary.txt"), s);
  out << fmt::format("continuity: decreasing = {}, modulus exponent = {:.4g}\n{}\n", probe.decreasing,
                     probe.modulus_exponent, ab.message);
  return kExitOk;
}

int cmd_list(const RunConfig& c, std::ostream& out) {
  if (c.json) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& name : builtin_names()) {
      const auto b = benchmark(name);
      doc.push_back({{"name", b.name}, {"description", b.description}, {"state_dim", b.problem.state_dim()},
                     {"control_dim", b.problem.control_dim()}, {"reference", b.reference_source}});
    }
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  for (const auto& name : builtin_names()) out << fmt::format("{:<16} {}\n", name, benchmark(name).description);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Infinite-horizon Pontryagin toolkit", "horizon-pmp"};
  app.require_subcommand(1);
  auto* src = app.add_option_group("problem source");
  auto* opt_problem = src->add_option("--problem", c.problem_path, "Problem document (JSON)");
  auto* opt_builtin = src->add_option("--builtin", c.builtin_name, "Builtin benchmark name");
  opt_problem->excludes(opt_builtin);
  app.add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for randomized control pools")->capture_default_str();
  app.add_option("--atol", c.atol, "Absolute integration tolerance")->capture_default_str();
  app.add_option("--rtol", c.rtol, "Relative integration tolerance")->capture_default_str();
  app.add_option("--tau", c.tau, "Comma-separated increasing horizons");
  app.add_option("--tmax", c.t_max, "Accumulation horizon")->capture_default_str();
  app.add_option("--tol-conv", c.tol_conv, "Convergence and verdict tolerance")->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Truncation scheme: penalized finite-horizon extremals");
  auto* adjoint = app.add_subcommand("adjoint", "Accumulated integral and Cauchy-type adjoint");
  auto* check = app.add_subcommand("check", "Transversality battery");
  check->add_option("--from", c.from_dir, "Directory holding psi_cauchy.csv from a previous adjoint run");
  check->add_option("--weight", c.weight, "Weight matrix entries over t, row-major, separated by ';'");
  auto* sweep = app.add_subcommand("sweep", "Continuity probe and abnormality indicator");
  sweep->add_option("--radii", c.radii, "Comma-separated decreasing probe radii")->capture_default_str();
  auto* list = app.add_subcommand("list", "List builtin benchmarks");
  list->add_flag("--json", c.json, "Structured listing");
  for (auto* sub : {solve, adjoint, check, sweep, list}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  }

  try {
    check_config(c);
    if (solve->parsed()) return cmd_solve(c, out);
    if (adjoint->parsed()) return cmd_adjoint(c, out);
    if (check->parsed()) return cmd_check(c, out);
    if (sweep->parsed()) return cmd_sweep(c, out);
    return cmd_list(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace hpmp
