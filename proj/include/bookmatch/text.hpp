//
// Copyright 2026 The bookmatch Authors
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
//
#ifndef BOOKMATCH_TEXT_HPP_
#define BOOKMATCH_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace bookmatch {

// Canonical text form shared by every matcher: Unicode NFKC, lowercased
// (root locale), every character that is not a letter or decimal digit
// folded to a space, whitespace runs collapsed, ends trimmed. Total and
// idempotent; invalid UTF-8 bytes become U+FFFD and fold to spaces.
std::string normalize_text(std::string_view raw);

// UTF-8 <-> UTF-32. Invalid input bytes decode to U+FFFD.
std::u32string utf8_to_utf32(std::string_view s);
std::string utf32_to_utf8(std::u32string_view s);

// Whitespace-separated tokens.
std::vector<std::string> split_tokens(std::string_view s);

}  // namespace bookmatch

#endif  // BOOKMATCH_TEXT_HPP_
