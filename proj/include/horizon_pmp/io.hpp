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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hpmp {

/// Shortest decimal with 17 significant digits; round-trips every double.
[[nodiscard]] std::string fmt17(double v);

/// Write through a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Minimal numeric CSV: one header row, then rows of doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Parse a numeric CSV. Throws ConfigError on ragged rows or non-numeric cells.
[[nodiscard]] CsvTable parse_csv(std::string_view text);

/// Number of usable hardware threads, capped by HORIZON_PMP_THREADS.
[[nodiscard]] unsigned worker_threads();

}  // namespace hpmp
