#ifndef SALESFORECAST_FEATURES_HPP
#define SALESFORECAST_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "salesforecast/dataset.hpp"
#include "salesforecast/matrix.hpp"

namespace salesforecast {

// Frozen feature order. Every module indexes feature channels by this.
enum Feature : std::size_t {
    kLag1 = 0,
    kLag7 = 1,
    kLag30 = 2,
    kRollMean7 = 3,
    kRollMean30 = 4,
    kDayOfWeek = 5,
    kMonth = 6,
};
constexpr std::size_t kNumFeatures = 7;
constexpr std::size_t kSeqLen = 30;
constexpr std::size_t kWarmupDays = 30; // deepest lookback of the oldest window row
constexpr std::size_t kMinSeriesLen = kWarmupDays + kSeqLen + 1;

inline const std::array<const char*, kNumFeatures>& feature_names() {
    static const std::array<const char*, kNumFeatures> names = {
        "lag_1", "lag_7", "lag_30", "rollmean_7", "rollmean_30", "day_of_week", "month"};
    return names;
}

/**
 * One training sample: 30 x 7 input matrix (rows oldest first) and the
 * next-day target. Values are raw sales units until a Scaler is applied.
 */
struct FeatureWindow {
    Matrix inputs;     // kSeqLen x kNumFeatures
    double target = 0; // sales at target_date
    Date target_date;
    SeriesKey key;
};

/**
 * Build leakage-free windows from one gap-free daily series. Row at date d
 * sees lags of d and trailing means ending at d; the target is the next
 * day. Rolling means include the current day and nothing after it.
 */
inline std::vector<FeatureWindow> build_windows(const std::vector<SalesRecord>& series) {
    if (series.size() < kMinSeriesLen)
        throw std::invalid_argument("series too short: need >= " + std::to_string(kMinSeriesLen) +
                                    " days, got " + std::to_string(series.size()));

    const std::size_t n = series.size();
    std::vector<double> sales(n);
    for (std::size_t i = 0; i < n; ++i) sales[i] = static_cast<double>(series[i].sales);

    // prefix[i] = sum of sales[0..i)
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sales[i];
    auto trailing_mean = [&](std::size_t day, std::size_t len) {
        return (prefix[day + 1] - prefix[day + 1 - len]) / static_cast<double>(len);
    };

    std::vector<FeatureWindow> windows;
    windows.reserve(n - 2 * kSeqLen);
    for (std::size_t target = 2 * kSeqLen; target < n; ++target) {
        FeatureWindow w;
        w.inputs = Matrix(kSeqLen, kNumFeatures);
        for (std::size_t t = 0; t < kSeqLen; ++t) {
            const std::size_t day = target - (kSeqLen - t);
            double* row = w.inputs.row(t);
            row[kLag1] = sales[day - 1];
            row[kLag7] = sales[day - 7];
            row[kLag30] = sales[day - 30];
            row[kRollMean7] = trailing_mean(day, 7);
            row[kRollMean30] = trailing_mean(day, 30);
            row[kDayOfWeek] = series[day].date.day_of_week() / 6.0;
            row[kMonth] = (series[day].date.month - 1) / 11.0;
        }
        w.target = sales[target];
        w.target_date = series[target].date;
        w.key = {series[target].store, series[target].item};
        windows.push_back(std::move(w));
    }
    return windows;
}

/**
 * Per-channel min-max scaler: 7 input channels plus the target channel,
 * fitted on training windows only. Degenerate channels (min == max) map
 * to 0 and invert back to the min.
 */
struct Scaler {
    static constexpr std::size_t kTargetChannel = kNumFeatures;
    static constexpr std::size_t kChannels = kNumFeatures + 1;
    std::array<double, kChannels> min{};
    std::array<double, kChannels> max{};
    bool fitted = false;

    double apply(std::size_t channel, double x) const {
        const double span = max[channel] - min[channel];
        if (span == 0.0) return 0.0;
        return (x - min[channel]) / span;
    }

    double invert(std::size_t channel, double y) const {
        const double span = max[channel] - min[channel];
        return min[channel] + y * span;
    }
};

inline Scaler fit_scaler(const std::vector<FeatureWindow>& train_windows) {
    if (train_windows.empty()) throw std::invalid_argument("fit_scaler: no training windows");
    Scaler s;
    s.min.fill(std::numeric_limits<double>::infinity());
    s.max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& w : train_windows) {
        for (std::size_t t = 0; t < w.inputs.rows(); ++t) {
            const double* row = w.inputs.row(t);
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                s.min[f] = std::min(s.min[f], row[f]);
                s.max[f] = std::max(s.max[f], row[f]);
            }
        }
        s.min[Scaler::kTargetChannel] = std::min(s.min[Scaler::kTargetChannel], w.target);
        s.max[Scaler::kTargetChannel] = std::max(s.max[Scaler::kTargetChannel], w.target);
    }
    s.fitted = true;
    return s;
}

/// Normalized copy of a window. Values outside the fitted range are not clipped.
inline FeatureWindow apply_scaler(const Scaler& s, const FeatureWindow& w) {
    if (!s.fitted) throw std::logic_error("apply_scaler: scaler not fitted");
    FeatureWindow out = w;
    for (std::size_t t = 0; t < out.inputs.rows(); ++t) {
        double* row = out.inputs.row(t);
        for (std::size_t f = 0; f < kNumFeatures; ++f) row[f] = s.apply(f, row[f]);
    }
    out.target = s.apply(Scaler::kTargetChannel, out.target);
    return out;
}

inline std::vector<FeatureWindow> apply_scaler(const Scaler& s,
                                               const std::vector<FeatureWindow>& ws) {
    std::vector<FeatureWindow> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(apply_scaler(s, w));
    return out;
}

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0; // half-open
    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange& o) const { return begin == o.begin && end == o.end; }
};

struct SplitPlan {
    IndexRange train;
    IndexRange test;
    std::vector<std::pair<IndexRange, IndexRange>> cv; // (train, validation) per fold
};

/// Chronological 80/20-style split: first floor(n*fraction) windows train.
inline SplitPlan temporal_split(std::size_t n_windows, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must be in (0,1)");
    if (n_windows < 2) throw std::invalid_argument("temporal_split: need at least 2 windows");
    SplitPlan plan;
    std::size_t cut = static_cast<std::size_t>(n_windows * train_fraction);
    if (cut == 0) cut = 1;
    if (cut == n_windows) cut = n_windows - 1;
    plan.train = {0, cut};
    plan.test = {cut, n_windows};
    return plan;
}

/**
 * Expanding-window cross-validation: the latter half of the training range
 * splits into k consecutive validation blocks; fold i trains on everything
 * strictly before its block.
 */
inline std::vector<std::pair<IndexRange, IndexRange>> cv_folds(std::size_t n_train,
                                                               std::size_t k) {
    if (k < 2) throw std::invalid_argument("cv_folds: k must be >= 2");
    const std::size_t start = n_train / 2;
    const std::size_t m = n_train - start;
    if (m < k) throw std::invalid_argument("cv_folds: not enough windows for " +
                                           std::to_string(k) + " folds");
    std::vector<std::pair<IndexRange, IndexRange>> folds;
    folds.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        IndexRange val{start + i * m / k, start + (i + 1) * m / k};
        folds.push_back({IndexRange{0, val.begin}, val});
    }
    return folds;
}

} // namespace salesforecast

#endif
