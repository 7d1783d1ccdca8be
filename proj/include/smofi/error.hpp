// Copyright 2026 The smofi-sim Authors. All Rights Reserved.
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

#include <stdexcept>
#include <string>

namespace smofi {

// Invalid experiment or model configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violation by a caller (shape mismatch, bad argument order, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training produced a non-finite loss. The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int round)
      : std::runtime_error("non-finite loss in round " + std::to_string(round)),
        round_(round) {}
  int round() const { return round_; }

 private:
  int round_;
};

}  // namespace smofi
