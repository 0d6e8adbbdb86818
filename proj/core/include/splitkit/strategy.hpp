#pragma once

#include <string>
#include <string_view>

namespace splitkit {

// One tag per splitting strategy. Short aliases are accepted anywhere a
// tag is parsed (CLI, config files): l1i, l1b, tu, tg, rlo, rr, us.
enum class StrategyTag {
  kLeaveOneLastItem,
  kLeaveOneLastBasket,
  kTemporalUser,
  kTemporalGlobal,
  kRandomLeaveOne,
  kRandomRatio,
  kUserSplit,
};

inline constexpr StrategyTag kAllStrategies[] = {
    StrategyTag::kLeaveOneLastItem, StrategyTag::kLeaveOneLastBasket,
    StrategyTag::kTemporalUser,     StrategyTag::kTemporalGlobal,
    StrategyTag::kRandomLeaveOne,   StrategyTag::kRandomRatio,
    StrategyTag::kUserSplit,
};

// Canonical name, e.g. "leave-one-last-item".
std::string strategy_tag_name(StrategyTag tag);

// Accepts canonical names and aliases; throws ConfigError on anything else.
StrategyTag parse_strategy_tag(std::string_view text);

// True for the strategies whose output depends on the seed.
bool strategy_uses_seed(StrategyTag tag);

}  // namespace splitkit
