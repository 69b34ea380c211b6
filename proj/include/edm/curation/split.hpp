#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "edm/core/rng.hpp"
#include "edm/data/records.hpp"

namespace edm::curation {

using data::DishRecord;
using data::Split;

struct SplitResult {
    std::map<std::string, Split> assignment;
    std::vector<double> strata_edges;          // kcal values at stratum boundaries
    std::vector<std::string> whole_train_bins; // log of bins too small to split
};

// Equal-frequency stratification over total kcal (ties broken by dish_id),
// deterministic shuffle per stratum, per-stratum train counts apportioned by
// largest remainder so that every stratum stays within +-1 of
// train_fraction * stratum size and the overall train count equals
// round(train_fraction * N).
inline SplitResult stratified_split(const std::vector<DishRecord>& records, double train_fraction,
                                    int n_strata, std::uint64_t seed) {
    require(!records.empty(), "stratified_split: empty record list");
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "stratified_split: train_fraction must be in (0, 1)");
    require(n_strata >= 1, "stratified_split: n_strata must be >= 1");

    const int n = static_cast<int>(records.size());
    std::vector<int> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (records[a].total_energy_kcal != records[b].total_energy_kcal)
            return records[a].total_energy_kcal < records[b].total_energy_kcal;
        return records[a].dish_id < records[b].dish_id;
    });

    const int bins = std::min(n_strata, n);
    std::vector<std::vector<int>> strata(bins);
    std::vector<int> starts(bins + 1);
    for (int b = 0; b <= bins; ++b)
        starts[b] = static_cast<int>(static_cast<long long>(b) * n / bins);
    for (int b = 0; b < bins; ++b)
        for (int i = starts[b]; i < starts[b + 1]; ++i) strata[b].push_back(order[i]);

    SplitResult result;
    for (int b = 1; b < bins; ++b)
        result.strata_edges.push_back(records[order[starts[b]]].total_energy_kcal);

    // Bins with fewer than 2 records cannot be split; they go wholly to TRAIN.
    std::vector<bool> forced(bins, false);
    long long forced_total = 0;
    for (int b = 0; b < bins; ++b) {
        if (static_cast<int>(strata[b].size()) < 2) {
            forced[b] = true;
            forced_total += static_cast<long long>(strata[b].size());
            result.whole_train_bins.push_back("stratum " + std::to_string(b) + " has " +
                                              std::to_string(strata[b].size()) +
                                              " record(s); assigned wholly to TRAIN");
        }
    }

    long long target = std::llround(train_fraction * n) - forced_total;
    long long rest_total = n - forced_total;
    target = std::clamp(target, 0LL, rest_total);

    // Largest-remainder apportionment of the train count over the free bins.
    std::vector<long long> train_counts(bins, 0);
    long long floor_sum = 0;
    std::vector<std::pair<double, int>> remainders;
    for (int b = 0; b < bins; ++b) {
        if (forced[b]) {
            train_counts[b] = static_cast<long long>(strata[b].size());
            continue;
        }
        double exact = train_fraction * static_cast<double>(strata[b].size());
        train_counts[b] = static_cast<long long>(std::floor(exact));
        floor_sum += train_counts[b];
        remainders.emplace_back(exact - std::floor(exact), b);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    long long extra = target - floor_sum;
    for (std::size_t i = 0; extra > 0 && i < remainders.size(); ++i) {
        int b = remainders[i].second;
        if (train_counts[b] < static_cast<long long>(strata[b].size())) {
            ++train_counts[b];
            --extra;
        }
    }

    Rng rng(seed);
    for (int b = 0; b < bins; ++b) {
        auto members = strata[b];
        Rng bin_rng = rng.derive(static_cast<std::uint64_t>(b));
        bin_rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            Split s = (static_cast<long long>(i) < train_counts[b]) ? Split::Train : Split::Test;
            result.assignment[records[members[i]].dish_id] = s;
        }
    }
    return result;
}

} // namespace edm::curation
