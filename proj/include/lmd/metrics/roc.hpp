#pragma once

#include <cstdint>
#include <span>

namespace lmd::metrics {

// Mann-Whitney pair tally over all (out, in) pairs: a pair scores 2 when the
// out-of-domain score is larger and 1 on a tie.
struct PairTally {
    std::uint64_t twice_wins = 0;
    std::uint64_t pairs = 0;

    double auc() const { return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs)); }
};

PairTally mann_whitney(std::span<const double> scores_in, std::span<const double> scores_out);

// Area under the ROC curve with out-of-domain as the positive class and ties
// counted as one half. Both lists must be non-empty and finite.
double roc_auc(std::span<const double> scores_in, std::span<const double> scores_out);

}  // namespace lmd::metrics
