// Copyright 2026 The pilotwave Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pw {

/// Failure categories surfaced by the library. Names match the kebab-case
/// labels written to reports and CLI diagnostics.
enum class ErrorKind {
    InvalidArgument,
    WidthTooSmall,
    PacketTouchesBoundary,
    GridMismatch,
    DestructiveAnnihilation,
    StabilityBoundViolated,
    UndefinedAtNode,
    SingularityHit,
    LeftSupport,
    StepBudgetExhausted,
    DivergenceCheckFailed,
    GridOverflow,
    NonlinearityDetected,
    UnmatchedEnsemble,
    OrthogonalSelection,
    PacketsNotDisjoint,
    SampleTooSmall,
    ConfigInvalid,
    IncompatibleRuns,
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &what);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string &what);

} // namespace pw
