// Copyright 2026 The sweepret Authors
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sweepret {

/// Entry point of the `sweepret` tool. Result records go to `out` as one
/// JSON object per line, human-readable progress to `err`. Returns 0 on
/// success, 1 on a runtime error (reported as a JSON "error" record) and 2
/// on usage errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

/// git-describe-style version baked in at configure time.
const char* version_string();

}  // namespace sweepret
