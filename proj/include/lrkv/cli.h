// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRKV_CLI_H_
#define LRKV_CLI_H_

#include <ostream>

namespace lrkv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the lrkv_lab tool. Subcommands: gen-weights, verify, memory,
// flops, ablate, diversity, svd-compare, gradcheck. CSV goes to --out (or
// `out` when --out is "-" or absent); diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrkv

#endif  // LRKV_CLI_H_
