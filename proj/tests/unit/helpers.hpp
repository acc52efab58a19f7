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

#pragma once

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "horizon_pmp/problem.hpp"

namespace hpmp::test {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vector scalar(double v) { return vec({v}); }

/// Fresh scratch directory under the build tree (or the system temp dir).
inline std::filesystem::path scratch(const std::string& name) {
  const char* root = std::getenv("HPMP_TEST_TMP");
  auto dir = (root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "hpmp-tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// One-state, one-control problem from expression strings on the box [lo, hi].
inline ControlProblem scalar_problem(const std::string& f, const std::string& g, double lo = 0.0, double hi = 1.0,
                                     double x0 = 0.0) {
  return ControlProblem::from_strings(1, 1, {f}, g, ControlSet::box(scalar(lo), scalar(hi)), scalar(x0));
}

/// Linear dynamics x' = M x with a dummy control on [0, 1] and x0 = (1, ..., 1).
inline ControlProblem linear_problem(const Matrix& M, const std::string& g = "0") {
  std::vector<std::string> f;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::string row = "0*u1";
    for (Eigen::Index j = 0; j < M.cols(); ++j) row += fmt::format(" + ({:.17g})*x{}", M(i, j), j + 1);
    f.push_back(row);
  }
  return ControlProblem::from_strings(static_cast<std::size_t>(M.rows()), 1, f, g,
                                      ControlSet::box(scalar(0), scalar(1)), Vector::Ones(M.rows()));
}

inline const std::vector<std::string> kExprSymbols{"t", "x1", "u1"};

/// Random expression over t, x1, u1 whose domain covers [-1, 1]^3.
inline std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  auto sub = [&] { return random_expr(rng, depth - 1); };
  switch (pick(rng)) {
    case 0: return kExprSymbols[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
    case 1: return std::to_string(coef(rng));
    case 2: return "(" + sub() + " + " + sub() + ")";
    case 3: return "(" + sub() + " - " + sub() + ")";
    case 4: return "(" + sub() + " * " + sub() + ")";
    case 5: return "(" + sub() + ") / (2 + cos(" + sub() + "))";
    case 6: return "exp(0.3 * " + sub() + ")";
    case 7: return "sin(" + sub() + ")";
    case 8: return "log(3 + sin(" + sub() + "))";
    case 9: return "sqrt(1 + (" + sub() + ")^2)";
    case 10: return "(" + sub() + ")^3";
    default: return "-" + sub();
  }
}

}  // namespace hpmp::test
