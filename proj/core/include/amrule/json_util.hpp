/*
 * Copyright 2026 The AMRule Authors.
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

#ifndef AMRULE_JSON_UTIL_HPP_
#define AMRULE_JSON_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace amrule {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string ReadTextFile(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// reader never observes a half-written file.
void WriteTextFileAtomic(const std::filesystem::path& path,
                         const std::string& text);

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& value);

std::vector<OrderedJson> ReadJsonLines(const std::filesystem::path& path);

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(const std::string& text);

// Little-endian float64 array <-> base64 text.
std::string EncodeFloat64Base64(std::span<const double> values);
std::vector<double> DecodeFloat64Base64(const std::string& text);

}  // namespace amrule

#endif  // AMRULE_JSON_UTIL_HPP_
