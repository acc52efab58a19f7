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

#include <iosfwd>

namespace hpmp {

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitNotConverged = 2,   // solve: some truncation step did not converge
  kExitNoLimit = 3,        // adjoint: integral diverged or oscillates
};

/// Entry point of the `horizon-pmp` executable, with injectable streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hpmp
