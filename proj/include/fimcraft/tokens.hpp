#pragma once

#include <cstddef>
#include <string_view>

namespace fimcraft {

/// Estimates model token counts. Implementations must be monotone: a
/// substring never estimates higher than the string containing it.
class TokenEstimator {
  public:
    virtual ~TokenEstimator() = default;
    virtual std::size_t estimate(std::string_view text) const = 0;
};

/// ceil(code points / 4).
class CharHeuristicEstimator final : public TokenEstimator {
  public:
    std::size_t estimate(std::string_view text) const override;
};

const TokenEstimator& default_estimator();

}  // namespace fimcraft
