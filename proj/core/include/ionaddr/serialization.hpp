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

#include <string_view>

#include <nlohmann/json.hpp>

#include "ionaddr/aod.hpp"
#include "ionaddr/crosstalk.hpp"
#include "ionaddr/dynamics.hpp"
#include "ionaddr/estimation.hpp"
#include "ionaddr/optics.hpp"

// JSON documents for the value types. Readers validate the decoded value and
// report problems as ConfigError naming the offending key.

namespace ionaddr {

/// Parses `text`, reporting syntax errors as ConfigError with line:column.
nlohmann::json parse_json(std::string_view text, std::string_view source);

void to_json(nlohmann::json& j, const GaussianSpot& spot);
void from_json(const nlohmann::json& j, GaussianSpot& spot);

void to_json(nlohmann::json& j, const BeamProfile& profile);
void from_json(const nlohmann::json& j, BeamProfile& profile);

void to_json(nlohmann::json& j, const DriveTone& tone);
void from_json(const nlohmann::json& j, DriveTone& tone);

void to_json(nlohmann::json& j, const ToneSet& tones);
void from_json(const nlohmann::json& j, ToneSet& tones);

void to_json(nlohmann::json& j, const AodChannel& channel);
void from_json(const nlohmann::json& j, AodChannel& channel);

void to_json(nlohmann::json& j, const SequenceTiming& timing);

void to_json(nlohmann::json& j, const FitResult& fit);
void to_json(nlohmann::json& j, const RabiFit& fit);
void to_json(nlohmann::json& j, const ScanPeak& peak);
void to_json(nlohmann::json& j, const ModeComparison& comparison);

/// Reads a required number at `key`; `path` prefixes error messages.
double require_number(const nlohmann::json& j, std::string_view key, std::string_view path);

} // namespace ionaddr
