#ifndef SALESFORECAST_EVALUATION_HPP
#define SALESFORECAST_EVALUATION_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "salesforecast/features.hpp"
#include "salesforecast/nn.hpp"

namespace salesforecast {

enum class ZeroPolicy { exclude, epsilon };

/**
 * MAPE in percent. Zero actuals either drop out (exclude) or get an
 * epsilon floor in the denominator.
 */
inline double mape(const std::vector<double>& actual, const std::vector<double>& predicted,
                   ZeroPolicy policy = ZeroPolicy::exclude, double epsilon = 1e-9) {
    if (actual.size() != predicted.size()) throw std::invalid_argument("mape: length mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        double denom = std::abs(actual[k]);
        if (denom == 0.0) {
            if (policy == ZeroPolicy::exclude) continue;
            denom = std::max(denom, epsilon);
        }
        sum += std::abs(actual[k] - predicted[k]) / denom;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mape: every term excluded (all actuals zero)");
    return 100.0 * sum / static_cast<double>(n);
}

inline double rmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.empty()) throw std::invalid_argument("rmse: empty input");
    if (actual.size() != predicted.size()) throw std::invalid_argument("rmse: length mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        const double r = actual[k] - predicted[k];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

struct Residual {
    Date target_date;
    double actual = 0;
    double predicted = 0;
};

struct EvalResult {
    double mape_percent = 0;
    double rmse = 0;
    std::size_t n_samples = 0;
    std::vector<Residual> residuals; // original sales units
};

/**
 * Run inference over normalized windows and score in original sales units
 * via the training-time scaler.
 */
inline EvalResult evaluate(const ModelConfig& cfg, const ModelWeights& weights,
                           const std::vector<FeatureWindow>& normalized_windows,
                           const Scaler& scaler, ZeroPolicy policy = ZeroPolicy::exclude) {
    if (normalized_windows.empty()) throw std::invalid_argument("evaluate: no windows");
    if (!scaler.fitted) throw std::logic_error("evaluate: scaler not fitted");
    std::vector<double> actual, predicted;
    EvalResult result;
    actual.reserve(normalized_windows.size());
    predicted.reserve(normalized_windows.size());
    for (const auto& w : normalized_windows) {
        const double pred_norm = forward(cfg, weights, w.inputs);
        const double pred = scaler.invert(Scaler::kTargetChannel, pred_norm);
        const double act = scaler.invert(Scaler::kTargetChannel, w.target);
        actual.push_back(act);
        predicted.push_back(pred);
        result.residuals.push_back({w.target_date, act, pred});
    }
    result.mape_percent = mape(actual, predicted, policy);
    result.rmse = rmse(actual, predicted);
    result.n_samples = actual.size();
    return result;
}

namespace detail {

// Regularized incomplete beta via Lentz's continued fraction.
inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-14;
    constexpr double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("betacf: continued fraction failed to converge");
}

inline double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace detail

/// Two-sided p-value for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (df <= 0) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return detail::incbeta(df / 2.0, 0.5, x);
}

struct TTestResult {
    double t_statistic = 0;
    double p_value = 1;
    std::size_t degrees_of_freedom = 0;
    double mean_difference = 0;
    bool zero_variance = false;
};

/**
 * Paired two-sided t-test; samples are paired by index. Zero-variance
 * differences with a nonzero mean report t = +/-inf, p = 0, flagged.
 */
inline TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_ttest: need at least 2 paired samples");

    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = a[k] - b[k];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.degrees_of_freedom = n - 1;
    r.mean_difference = mean;
    if (sd == 0.0) {
        r.zero_variance = true;
        if (mean == 0.0) {
            r.t_statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.t_statistic, static_cast<double>(n - 1));
    return r;
}

/// Seasonal-naive forecast: predict the value `period` days earlier.
/// The minimal bar a learned model has to beat.
inline double seasonal_naive_mape(const std::vector<double>& series, std::size_t first_target,
                                  std::size_t period, ZeroPolicy policy = ZeroPolicy::exclude) {
    if (first_target < period || first_target >= series.size())
        throw std::invalid_argument("seasonal_naive_mape: bad target range");
    std::vector<double> actual(series.begin() + static_cast<std::ptrdiff_t>(first_target),
                               series.end());
    std::vector<double> predicted;
    predicted.reserve(actual.size());
    for (std::size_t t = first_target; t < series.size(); ++t)
        predicted.push_back(series[t - period]);
    return mape(actual, predicted, policy);
}

} // namespace salesforecast

#endif
