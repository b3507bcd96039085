#include "lmd/metrics/roc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lmd::metrics {

PairTally mann_whitney(std::span<const double> scores_in, std::span<const double> scores_out) {
    if (scores_in.empty() || scores_out.empty()) {
        throw std::invalid_argument("roc_auc: both score lists must be non-empty");
    }
    std::vector<std::pair<double, bool>> all;  // (score, is_out)
    all.reserve(scores_in.size() + scores_out.size());
    for (double s : scores_in) all.emplace_back(s, false);
    for (double s : scores_out) all.emplace_back(s, true);
    for (const auto& [s, is_out] : all) {
        if (!std::isfinite(s)) throw std::invalid_argument("roc_auc: non-finite score");
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    PairTally tally;
    tally.pairs = static_cast<std::uint64_t>(scores_in.size()) * scores_out.size();
    std::uint64_t in_below = 0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::uint64_t in_tied = 0, out_tied = 0;
        while (j < all.size() && all[j].first == all[i].first) {
            (all[j].second ? out_tied : in_tied) += 1;
            ++j;
        }
        tally.twice_wins += out_tied * (2 * in_below + in_tied);
        in_below += in_tied;
        i = j;
    }
    return tally;
}

double roc_auc(std::span<const double> scores_in, std::span<const double> scores_out) {
    return mann_whitney(scores_in, scores_out).auc();
}

}  // namespace lmd::metrics
