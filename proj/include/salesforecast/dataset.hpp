#ifndef SALESFORECAST_DATASET_HPP
#define SALESFORECAST_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace salesforecast {

/**
 * Calendar day with pure day-count arithmetic. No time zones, no times of
 * day; the data is strictly daily.
 */
struct Date {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    // Days since 1970-01-01 (Howard Hinnant's days_from_civil).
    std::int64_t serial() const {
        std::int64_t y = year;
        y -= month <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static Date from_serial(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        Date out;
        out.year = static_cast<int>(y + (m <= 2));
        out.month = static_cast<int>(m);
        out.day = static_cast<int>(d);
        return out;
    }

    int day_of_week() const { // 0 = Monday .. 6 = Sunday
        std::int64_t s = serial();
        return static_cast<int>(((s % 7) + 10) % 7); // 1970-01-01 was a Thursday (=3)
    }

    Date plus_days(std::int64_t n) const { return from_serial(serial() + n); }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    static Date parse(const std::string& s) {
        Date d;
        if (s.size() != 10 || s[4] != '-' || s[7] != '-')
            throw std::invalid_argument("bad date '" + s + "' (expected YYYY-MM-DD)");
        auto num = [&](int pos, int len) {
            int v = 0;
            for (int i = pos; i < pos + len; ++i) {
                if (s[i] < '0' || s[i] > '9')
                    throw std::invalid_argument("bad date '" + s + "' (expected YYYY-MM-DD)");
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        d.year = num(0, 4);
        d.month = num(5, 2);
        d.day = num(8, 2);
        if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
            throw std::invalid_argument("bad date '" + s + "' (out of range)");
        return d;
    }

    bool operator==(const Date& o) const {
        return year == o.year && month == o.month && day == o.day;
    }
    bool operator<(const Date& o) const { return serial() < o.serial(); }
};

/// One raw dataset row: (date, store, item, sales).
struct SalesRecord {
    Date date;
    int store = 0;
    int item = 0;
    long sales = 0;

    bool operator==(const SalesRecord& o) const {
        return date == o.date && store == o.store && item == o.item && sales == o.sales;
    }
};

struct SeriesKey {
    int store = 0;
    int item = 0;
    bool operator<(const SeriesKey& o) const {
        return store != o.store ? store < o.store : item < o.item;
    }
    bool operator==(const SeriesKey& o) const { return store == o.store && item == o.item; }
};

using SeriesMap = std::map<SeriesKey, std::vector<SalesRecord>>;

enum class FillPolicy { reject_gaps, zero_fill };

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline long parse_long(const std::string& s, const char* what, std::size_t line_no) {
    if (s.empty()) throw DataError("line " + std::to_string(line_no) + ": empty " + what);
    std::size_t pos = 0;
    long v;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    if (pos != s.size())
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

} // namespace detail

/**
 * Load a `date,store,item,sales` CSV. Every series comes back sorted by
 * date and gap-free: gaps either reject the file or get zero-filled,
 * depending on policy.
 */
inline SeriesMap load_csv(const std::string& path, FillPolicy policy = FillPolicy::reject_gaps,
                          std::size_t* total_records = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file, expected header");
    {
        auto fields = detail::split_csv_line(line);
        if (fields != std::vector<std::string>{"date", "store", "item", "sales"})
            throw DataError("'" + path + "': bad header, expected date,store,item,sales");
    }

    SeriesMap series;
    std::map<std::tuple<int, int, std::int64_t>, std::size_t> seen; // (store,item,day) -> line
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        SalesRecord rec;
        try {
            rec.date = Date::parse(fields[0]);
        } catch (const std::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        rec.store = static_cast<int>(detail::parse_long(fields[1], "store", line_no));
        rec.item = static_cast<int>(detail::parse_long(fields[2], "item", line_no));
        rec.sales = detail::parse_long(fields[3], "sales", line_no);
        if (rec.store < 1) throw DataError("line " + std::to_string(line_no) + ": store id < 1");
        if (rec.item < 1) throw DataError("line " + std::to_string(line_no) + ": item id < 1");
        if (rec.sales < 0) throw DataError("line " + std::to_string(line_no) + ": negative sales");
        auto [it, inserted] = seen.emplace(
            std::make_tuple(rec.store, rec.item, rec.date.serial()), line_no);
        if (!inserted)
            throw DataError("line " + std::to_string(line_no) + ": duplicate (date,store,item) " +
                            rec.date.to_string() + "," + std::to_string(rec.store) + "," +
                            std::to_string(rec.item) + " (first seen at line " +
                            std::to_string(it->second) + ")");
        series[{rec.store, rec.item}].push_back(rec);
    }

    std::size_t total = 0;
    for (auto& [key, recs] : series) {
        std::stable_sort(recs.begin(), recs.end(), [](const SalesRecord& a, const SalesRecord& b) {
            return a.date < b.date;
        });
        if (policy == FillPolicy::zero_fill) {
            std::vector<SalesRecord> filled;
            filled.reserve(recs.size());
            for (std::size_t i = 0; i < recs.size(); ++i) {
                if (i > 0) {
                    std::int64_t prev = recs[i - 1].date.serial();
                    for (std::int64_t s = prev + 1; s < recs[i].date.serial(); ++s)
                        filled.push_back({Date::from_serial(s), key.store, key.item, 0});
                }
                filled.push_back(recs[i]);
            }
            recs = std::move(filled);
        } else {
            for (std::size_t i = 1; i < recs.size(); ++i) {
                std::int64_t gap = recs[i].date.serial() - recs[i - 1].date.serial();
                if (gap != 1)
                    throw DataError("gap in series (store " + std::to_string(key.store) +
                                    ", item " + std::to_string(key.item) + ") between " +
                                    recs[i - 1].date.to_string() + " and " +
                                    recs[i].date.to_string());
            }
        }
        total += recs.size();
    }
    if (total_records) *total_records = total;
    return series;
}

inline void write_csv(const std::string& path, const SeriesMap& series) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "date,store,item,sales\n";
    for (const auto& [key, recs] : series)
        for (const auto& r : recs)
            out << r.date.to_string() << ',' << r.store << ',' << r.item << ',' << r.sales << '\n';
}

/**
 * Recipe for a desk-scale synthetic daily series: level + linear trend +
 * weekly and yearly sinusoids + seeded Gaussian noise.
 */
struct SyntheticSpec {
    int n_days = 800;
    double base_level = 50.0;
    double weekly_amplitude = 10.0;
    double yearly_amplitude = 0.0;
    double trend_per_day = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 1;
    Date start_date{2013, 1, 1};
    int store = 1;
    int item = 1;

    void validate() const {
        if (n_days < 61) throw std::invalid_argument("synthetic spec: n_days must be >= 61");
        if (noise_std < 0) throw std::invalid_argument("synthetic spec: noise_std must be >= 0");
    }
};

/**
 * Deterministic synthetic generator. Noise comes from mt19937_64 through
 * std::normal_distribution, so bitwise agreement holds within one
 * implementation; cross-implementation comparisons should use noise_std=0.
 */
inline std::vector<SalesRecord> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_std > 0 ? spec.noise_std : 1.0);
    std::vector<SalesRecord> out;
    out.reserve(spec.n_days);
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (int t = 0; t < spec.n_days; ++t) {
        double v = spec.base_level + spec.trend_per_day * t +
                   spec.weekly_amplitude * std::sin(two_pi * t / 7.0) +
                   spec.yearly_amplitude * std::sin(two_pi * t / 365.25);
        if (spec.noise_std > 0) v += noise(rng);
        long sales = std::lround(v);
        if (sales < 0) sales = 0;
        out.push_back({spec.start_date.plus_days(t), spec.store, spec.item, sales});
    }
    return out;
}

} // namespace salesforecast

#endif
