#ifndef SALESFORECAST_MODEL_IO_HPP
#define SALESFORECAST_MODEL_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salesforecast/features.hpp"
#include "salesforecast/nn.hpp"

namespace salesforecast {

class ModelIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr char kModelMagic[4] = {'T', 'L', 'S', 'B'};
constexpr std::uint16_t kModelFormatVersion = 1;

/**
 * Weight file layout: magic "TLSB", u16 format version, u32 header length,
 * JSON header (config + feature order + scaler + seed + training
 * metadata), then every tensor as little-endian float32 in the
 * for_each_tensor order.
 */
struct LoadedModel {
    ModelConfig config;
    ModelWeights weights;
    Scaler scaler;
    nlohmann::json meta;
    std::size_t tensor_payload_bytes = 0;
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n, const char* what) {
        if (pos + n > buf.size())
            throw ModelIoError(std::string("truncated model file (reading ") + what + ")");
    }
    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

} // namespace detail

inline nlohmann::json scaler_to_json(const Scaler& s) {
    nlohmann::json j;
    j["min"] = s.min;
    j["max"] = s.max;
    return j;
}

inline Scaler scaler_from_json(const nlohmann::json& j) {
    Scaler s;
    auto mins = j.at("min").get<std::vector<double>>();
    auto maxs = j.at("max").get<std::vector<double>>();
    if (mins.size() != Scaler::kChannels || maxs.size() != Scaler::kChannels)
        throw ModelIoError("scaler: expected " + std::to_string(Scaler::kChannels) + " channels");
    std::copy(mins.begin(), mins.end(), s.min.begin());
    std::copy(maxs.begin(), maxs.end(), s.max.begin());
    s.fitted = true;
    return s;
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"input_dim", c.input_dim},       {"seq_len", c.seq_len},
            {"hidden_units", c.hidden_units}, {"dense_units", c.dense_units},
            {"output_dim", c.output_dim},     {"dropout_rate", c.dropout_rate}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.hidden_units = j.at("hidden_units").get<std::size_t>();
    c.dense_units = j.at("dense_units").get<std::size_t>();
    c.output_dim = j.at("output_dim").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.validate();
    return c;
}

/// Serialize a model to bytes. `meta` carries seed and training metadata;
/// it must not contain wall-clock fields if byte-reproducibility matters.
inline std::string serialize_model(const ModelConfig& cfg, const ModelWeights& weights,
                                   const Scaler& scaler, const nlohmann::json& meta) {
    nlohmann::json header;
    header["config"] = config_to_json(cfg);
    header["feature_order"] =
        std::vector<std::string>(feature_names().begin(), feature_names().end());
    header["scaler"] = scaler_to_json(scaler);
    header["meta"] = meta;
    const std::string header_str = header.dump();

    std::string out;
    out.append(kModelMagic, 4);
    detail::put_u16(out, kModelFormatVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(header_str.size()));
    out += header_str;
    for_each_tensor(const_cast<ModelWeights&>(weights),
                    [&](const char*, std::vector<double>& t) {
                        for (double v : t) detail::put_f32(out, static_cast<float>(v));
                    });
    return out;
}

inline void save_model(const std::string& path, const ModelConfig& cfg,
                       const ModelWeights& weights, const Scaler& scaler,
                       const nlohmann::json& meta) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ModelIoError("cannot write '" + path + "'");
    const std::string bytes = serialize_model(cfg, weights, scaler, meta);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ModelIoError("write failed for '" + path + "'");
}

inline LoadedModel deserialize_model(const std::string& buf) {
    detail::Reader r{buf};
    r.need(4, "magic");
    if (std::memcmp(buf.data(), kModelMagic, 4) != 0) throw ModelIoError("bad magic");
    r.pos = 4;
    const std::uint16_t version = r.u16();
    if (version != kModelFormatVersion)
        throw ModelIoError("unsupported format version " + std::to_string(version));
    const std::uint32_t header_len = r.u32();
    r.need(header_len, "header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(r.pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ModelIoError(std::string("bad header JSON: ") + e.what());
    }
    r.pos += header_len;

    LoadedModel m;
    m.config = config_from_json(header.at("config"));
    m.scaler = scaler_from_json(header.at("scaler"));
    m.meta = header.value("meta", nlohmann::json::object());
    m.weights = ModelWeights::zeros(m.config);

    const std::size_t payload_start = r.pos;
    for_each_tensor(m.weights, [&](const char* name, std::vector<double>& t) {
        for (double& v : t) {
            if (r.pos + 4 > buf.size())
                throw ModelIoError(std::string("truncated tensor payload in ") + name);
            v = static_cast<double>(r.f32());
        }
    });
    m.tensor_payload_bytes = r.pos - payload_start;
    if (r.pos != buf.size())
        throw ModelIoError("trailing bytes after tensor payload (header/shape disagreement)");
    if (m.tensor_payload_bytes != param_count(m.config) * 4)
        throw ModelIoError("tensor payload does not match config parameter count");
    return m;
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ModelIoError("cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_model(buf);
}

/// Round every weight through float32, mirroring what save+load does to values.
inline ModelWeights quantize_to_f32(const ModelWeights& w) {
    ModelWeights out = w;
    for_each_tensor(out, [](const char*, std::vector<double>& t) {
        for (double& v : t) v = static_cast<double>(static_cast<float>(v));
    });
    return out;
}

} // namespace salesforecast

#endif
