#include "fimcraft/tokens.hpp"

#include "fimcraft/util.hpp"

namespace fimcraft {

std::size_t CharHeuristicEstimator::estimate(std::string_view text) const
{
    return (codepoint_count(text) + 3) / 4;
}

const TokenEstimator& default_estimator()
{
    static const CharHeuristicEstimator estimator;
    return estimator;
}

}  // namespace fimcraft
