#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edm/core/strings.hpp"
#include "edm/data/records.hpp"

namespace edm::curation {

// Reference energy statistics for report context: the curated 909-image
// Nutrition5k subset versus the full depth-capture set.
constexpr double kReferenceSubsetMeanKcal = 124.96;
constexpr double kReferenceFullDatasetMeanKcal = 254.94;

struct DistributionStats {
    double mean_kcal = 0.0;
    double std_kcal = 0.0; // population standard deviation
    std::vector<std::pair<double, int>> histogram; // (bin lower edge, count)
    double outlier_fraction = 0.0; // beyond mean +- 3 sigma
    double min_kcal = 0.0;
    double max_kcal = 0.0;
};

inline DistributionStats distribution_stats(const std::vector<data::DishRecord>& records, int n_bins) {
    require(!records.empty(), "distribution_stats: empty record list");
    require(n_bins >= 1, "distribution_stats: n_bins must be >= 1");

    DistributionStats s;
    const double n = static_cast<double>(records.size());
    double sum = 0.0;
    s.min_kcal = records.front().total_energy_kcal;
    s.max_kcal = records.front().total_energy_kcal;
    for (const auto& r : records) {
        sum += r.total_energy_kcal;
        s.min_kcal = std::min(s.min_kcal, r.total_energy_kcal);
        s.max_kcal = std::max(s.max_kcal, r.total_energy_kcal);
    }
    s.mean_kcal = sum / n;
    double sq = 0.0;
    for (const auto& r : records) {
        double d = r.total_energy_kcal - s.mean_kcal;
        sq += d * d;
    }
    s.std_kcal = std::sqrt(sq / n);

    const double width = (s.max_kcal - s.min_kcal) / n_bins;
    std::vector<int> counts(n_bins, 0);
    for (const auto& r : records) {
        int bin = 0;
        if (width > 0.0)
            bin = std::min(n_bins - 1,
                           static_cast<int>(std::floor((r.total_energy_kcal - s.min_kcal) / width)));
        ++counts[bin];
    }
    for (int b = 0; b < n_bins; ++b)
        s.histogram.emplace_back(s.min_kcal + b * width, counts[b]);

    int outliers = 0;
    for (const auto& r : records)
        if (std::abs(r.total_energy_kcal - s.mean_kcal) > 3.0 * s.std_kcal) ++outliers;
    s.outlier_fraction = outliers / n;
    return s;
}

inline void write_stats_csv(const std::string& path, const DistributionStats& s) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write stats: " + path);
    out << "bin_lower,count\n";
    for (const auto& [lower, count] : s.histogram)
        out << format_double(lower) << "," << count << "\n";
    expect(out.good(), "write failed: " + path);
}

inline nlohmann::json stats_to_json(const DistributionStats& s) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& [lower, count] : s.histogram)
        bins.push_back(nlohmann::json{{"bin_lower", lower}, {"count", count}});
    return nlohmann::json{
        {"mean_kcal", s.mean_kcal},
        {"std_kcal", s.std_kcal},
        {"min_kcal", s.min_kcal},
        {"max_kcal", s.max_kcal},
        {"outlier_fraction", s.outlier_fraction},
        {"histogram", bins},
        {"reference",
         {{"curated_subset_mean_kcal", kReferenceSubsetMeanKcal},
          {"full_dataset_mean_kcal", kReferenceFullDatasetMeanKcal}}}};
}

inline void write_stats_json(const std::string& path, const DistributionStats& s) {
    std::ofstream out(path, std::ios::trunc);
    expect(out.is_open(), "cannot write stats: " + path);
    out << stats_to_json(s).dump(2) << "\n";
    expect(out.good(), "write failed: " + path);
}

} // namespace edm::curation
