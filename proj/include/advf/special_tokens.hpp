// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string_view>

#include "advf/tensor.hpp"

namespace advf::special {

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kMask = 2;
inline constexpr TokenId kBos = 3;
inline constexpr TokenId kEos = 4;
inline constexpr TokenId kNameMask = 5;
inline constexpr TokenId kCount = 6;

/// Ignored positions in cross-entropy targets.
inline constexpr TokenId kIgnore = -100;

inline constexpr std::array<std::string_view, kCount> kNames{
    "<pad>", "<unk>", "<mask>", "<bos>", "<eos>", "<name>"};

}  // namespace advf::special
