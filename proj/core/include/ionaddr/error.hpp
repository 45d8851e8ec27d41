// Copyright 2026 The ionaddr Authors
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

namespace ionaddr {

/// Broad category of a failure. The command-line front end maps these to
/// process exit codes.
enum class ErrorKind {
    Domain,
    Normalization,
    DegenerateCalibration,
    InvalidToneSet,
    InfeasibleBudget,
    Ambiguity,
    Range,
    EmptySection,
    Config,
    Io,
    NoConvergence,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define IONADDR_DEFINE_ERROR(Name, Kind)                                                  \
    class Name : public Error {                                                          \
    public:                                                                              \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}         \
    };

IONADDR_DEFINE_ERROR(DomainError, Domain)
IONADDR_DEFINE_ERROR(NormalizationError, Normalization)
IONADDR_DEFINE_ERROR(CalibrationError, DegenerateCalibration)
IONADDR_DEFINE_ERROR(ToneSetError, InvalidToneSet)
IONADDR_DEFINE_ERROR(BudgetError, InfeasibleBudget)
IONADDR_DEFINE_ERROR(AmbiguityError, Ambiguity)
IONADDR_DEFINE_ERROR(RangeError, Range)
IONADDR_DEFINE_ERROR(EmptySectionError, EmptySection)
IONADDR_DEFINE_ERROR(ConfigError, Config)
IONADDR_DEFINE_ERROR(IoError, Io)
IONADDR_DEFINE_ERROR(FitError, NoConvergence)

#undef IONADDR_DEFINE_ERROR

} // namespace ionaddr
