// Copyright 2026 The cfqa Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: gen-data, train, eval, probe-gen and report.
//
// Every path is relative to --workspace. A run prints one JSON summary line
// to `out`; a failure prints one JSON error line to `err` and returns
// nonzero.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cfqa {

// Environment variable that supplies --config when the flag is absent.
inline constexpr const char* kConfigEnv = "CFQA_CONFIG";

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace cfqa
