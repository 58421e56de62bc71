// Copyright 2026 The TurnLens Authors.
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

#ifndef TURNLENS_TEXT_UTIL_H_
#define TURNLENS_TEXT_UTIL_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace turnlens {

// Length of a "<name>" placeholder starting at pos (name is [A-Za-z0-9_]+),
// or 0 if there is none.
std::size_t PlaceholderLengthAt(std::string_view text, std::size_t pos);

std::string ToLowerAscii(std::string_view text);
std::string_view TrimAscii(std::string_view text);
// Collapses runs of ASCII whitespace to one space and trims.
std::string CollapseWhitespace(std::string_view text);

std::uint64_t Fnv1a64(std::string_view data,
                      std::uint64_t seed = 14695981039346656037ULL);
std::string HexU64(std::uint64_t value);

std::string HtmlEscape(std::string_view text);

}  // namespace turnlens

#endif  // TURNLENS_TEXT_UTIL_H_
