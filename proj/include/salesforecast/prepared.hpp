#ifndef SALESFORECAST_PREPARED_HPP
#define SALESFORECAST_PREPARED_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salesforecast/dataset.hpp"
#include "salesforecast/features.hpp"
#include "salesforecast/model_io.hpp"

namespace salesforecast {

/**
 * On-disk prepared dataset, the handoff between `prepare` and
 * train/evaluate/sweep: normalized windows, the fitted scaler, and the
 * split plan. Keeping the scaler beside the windows is what stops a sweep
 * from ever refitting it inconsistently.
 */
struct PreparedData {
    std::vector<FeatureWindow> windows; // normalized, chronological
    Scaler scaler;
    SplitPlan split;
    nlohmann::json meta;
    std::string content_hash; // FNV-1a over the three files

    std::vector<FeatureWindow> train_windows() const {
        return {windows.begin() + split.train.begin, windows.begin() + split.train.end};
    }
    std::vector<FeatureWindow> test_windows() const {
        return {windows.begin() + split.test.begin, windows.begin() + split.test.end};
    }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string prepared_content_hash(const std::filesystem::path& dir) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char* name : {"windows.csv", "scaler.json", "split.json"})
        h = detail::fnv1a(h, detail::read_file(dir / name));
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline nlohmann::json range_to_json(const IndexRange& r) {
    return {{"begin", r.begin}, {"end", r.end}};
}

inline IndexRange range_from_json(const nlohmann::json& j) {
    return {j.at("begin").get<std::size_t>(), j.at("end").get<std::size_t>()};
}

/// Write windows.csv / scaler.json / split.json into `dir`.
inline void write_prepared(const std::filesystem::path& dir,
                           const std::vector<FeatureWindow>& normalized_windows,
                           const Scaler& scaler, const SplitPlan& split,
                           const nlohmann::json& meta = nlohmann::json::object()) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream f(dir / "windows.csv");
        if (!f) throw DataError("cannot write " + (dir / "windows.csv").string());
        f << "store,item,target_date";
        for (std::size_t t = 0; t < kSeqLen; ++t)
            for (std::size_t j = 0; j < kNumFeatures; ++j)
                f << ",x" << t << "_" << feature_names()[j];
        f << ",target\n";
        for (const auto& w : normalized_windows) {
            f << w.key.store << ',' << w.key.item << ',' << w.target_date.to_string();
            for (double v : w.inputs.storage()) f << ',' << detail::fmt_double(v);
            f << ',' << detail::fmt_double(w.target) << '\n';
        }
    }
    {
        nlohmann::json j = scaler_to_json(scaler);
        j["feature_order"] =
            std::vector<std::string>(feature_names().begin(), feature_names().end());
        std::ofstream f(dir / "scaler.json");
        f << j.dump(2) << '\n';
    }
    {
        nlohmann::json j;
        j["train"] = range_to_json(split.train);
        j["test"] = range_to_json(split.test);
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& [tr, va] : split.cv)
            folds.push_back({{"train", range_to_json(tr)}, {"validation", range_to_json(va)}});
        j["cv_folds"] = folds;
        j["meta"] = meta;
        std::ofstream f(dir / "split.json");
        f << j.dump(2) << '\n';
    }
}

inline PreparedData read_prepared(const std::filesystem::path& dir) {
    PreparedData out;

    {
        nlohmann::json j = nlohmann::json::parse(detail::read_file(dir / "scaler.json"));
        out.scaler = scaler_from_json(j);
    }
    {
        nlohmann::json j = nlohmann::json::parse(detail::read_file(dir / "split.json"));
        out.split.train = range_from_json(j.at("train"));
        out.split.test = range_from_json(j.at("test"));
        for (const auto& f : j.at("cv_folds"))
            out.split.cv.push_back({range_from_json(f.at("train")),
                                    range_from_json(f.at("validation"))});
        out.meta = j.value("meta", nlohmann::json::object());
    }
    {
        std::ifstream f(dir / "windows.csv");
        if (!f) throw DataError("cannot open " + (dir / "windows.csv").string());
        std::string line;
        if (!std::getline(f, line)) throw DataError("windows.csv: missing header");
        const std::size_t n_fields = 3 + kSeqLen * kNumFeatures + 1;
        std::size_t line_no = 1;
        while (std::getline(f, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto fields = detail::split_csv_line(line);
            if (fields.size() != n_fields)
                throw DataError("windows.csv line " + std::to_string(line_no) +
                                ": expected " + std::to_string(n_fields) + " fields");
            FeatureWindow w;
            w.key.store = static_cast<int>(detail::parse_long(fields[0], "store", line_no));
            w.key.item = static_cast<int>(detail::parse_long(fields[1], "item", line_no));
            w.target_date = Date::parse(fields[2]);
            w.inputs = Matrix(kSeqLen, kNumFeatures);
            for (std::size_t k = 0; k < kSeqLen * kNumFeatures; ++k)
                w.inputs.storage()[k] = std::stod(fields[3 + k]);
            w.target = std::stod(fields[3 + kSeqLen * kNumFeatures]);
            out.windows.push_back(std::move(w));
        }
    }
    if (out.split.test.end > out.windows.size())
        throw DataError("split.json ranges exceed window count");
    out.content_hash = prepared_content_hash(dir);
    return out;
}

} // namespace salesforecast

#endif
