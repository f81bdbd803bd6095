/*
 * Copyright 2026 The Telltale Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Command-line front end. Subcommands: extract-noise, make-masks, synth,
// train, eval, localize, report.
//
// Exit codes: 0 success, 1 usage or invalid argument, 2 data error,
// 3 numerical failure. Diagnostics go to `err`, results to files.

#include <iosfwd>
#include <string>
#include <vector>

#include "telltale/metrics.hpp"

namespace telltale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Arguments only, without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

// Column order of the merged report.
const std::vector<std::string>& report_columns();
// One row per report; cells of absent optional metrics are empty.
std::vector<std::vector<std::string>> report_rows(const std::vector<metrics::EvalReport>& reports);
std::string render_csv(const std::vector<metrics::EvalReport>& reports);
std::string render_text(const std::vector<metrics::EvalReport>& reports);

}  // namespace telltale::cli
