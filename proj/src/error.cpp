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

#include "pilotwave/error.hpp"

namespace pw {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::WidthTooSmall: return "width-too-small";
    case ErrorKind::PacketTouchesBoundary: return "packet-touches-boundary";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::DestructiveAnnihilation: return "destructive-annihilation";
    case ErrorKind::StabilityBoundViolated: return "stability-bound-violated";
    case ErrorKind::UndefinedAtNode: return "undefined-at-node";
    case ErrorKind::SingularityHit: return "singularity-hit";
    case ErrorKind::LeftSupport: return "left-support";
    case ErrorKind::StepBudgetExhausted: return "step-budget-exhausted";
    case ErrorKind::DivergenceCheckFailed: return "divergence-check-failed";
    case ErrorKind::GridOverflow: return "grid-overflow";
    case ErrorKind::NonlinearityDetected: return "nonlinearity-detected";
    case ErrorKind::UnmatchedEnsemble: return "unmatched-ensemble";
    case ErrorKind::OrthogonalSelection: return "orthogonal-selection";
    case ErrorKind::PacketsNotDisjoint: return "packets-not-disjoint";
    case ErrorKind::SampleTooSmall: return "sample-too-small";
    case ErrorKind::ConfigInvalid: return "config-invalid";
    case ErrorKind::IncompatibleRuns: return "incompatible-runs";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string &what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

} // namespace pw
