#include "splitkit/strategy.hpp"

#include "splitkit/errors.hpp"

namespace splitkit {

std::string strategy_tag_name(StrategyTag tag) {
  switch (tag) {
    case StrategyTag::kLeaveOneLastItem: return "leave-one-last-item";
    case StrategyTag::kLeaveOneLastBasket: return "leave-one-last-basket";
    case StrategyTag::kTemporalUser: return "temporal-user";
    case StrategyTag::kTemporalGlobal: return "temporal-global";
    case StrategyTag::kRandomLeaveOne: return "random-leave-one";
    case StrategyTag::kRandomRatio: return "random-ratio";
    case StrategyTag::kUserSplit: return "user-split";
  }
  throw ConfigError("unknown strategy tag");
}

StrategyTag parse_strategy_tag(std::string_view text) {
  if (text == "leave-one-last-item" || text == "l1i")
    return StrategyTag::kLeaveOneLastItem;
  if (text == "leave-one-last-basket" || text == "l1b")
    return StrategyTag::kLeaveOneLastBasket;
  if (text == "temporal-user" || text == "tu") return StrategyTag::kTemporalUser;
  if (text == "temporal-global" || text == "tg")
    return StrategyTag::kTemporalGlobal;
  if (text == "random-leave-one" || text == "rlo")
    return StrategyTag::kRandomLeaveOne;
  if (text == "random-ratio" || text == "rr") return StrategyTag::kRandomRatio;
  if (text == "user-split" || text == "us") return StrategyTag::kUserSplit;
  std::string valid;
  for (StrategyTag tag : kAllStrategies) {
    if (!valid.empty()) valid += ", ";
    valid += strategy_tag_name(tag);
  }
  throw ConfigError("unknown split strategy '" + std::string(text) +
                    "' (valid: " + valid + ")");
}

bool strategy_uses_seed(StrategyTag tag) {
  switch (tag) {
    case StrategyTag::kRandomLeaveOne:
    case StrategyTag::kRandomRatio:
    case StrategyTag::kUserSplit:
      return true;
    default:
      return false;
  }
}

}  // namespace splitkit
