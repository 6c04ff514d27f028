#pragma once

#include <array>
#include <string>
#include <vector>

#include "qdlearn/io_util.hpp"
#include "qdlearn/model.hpp"

namespace qdlearn {

// A trained network plus everything needed to turn raw simulation parameters
// into a reconstructed trajectory: site count, sample times, and the grid
// maxima the inputs were normalized with.
struct SurrogateModel {
    Model net;
    int n_sites = 0;
    std::vector<double> times_fs;
    double lambda_max = 0.0;
    double gamma_max = 0.0;
    double temperature_max = 0.0;
};

// Model container, version 1, little-endian:
//   magic "QDLMDL\0\0" | u32 version | u64 config digest
//   u32 n_sites | u64 n_times | times f64[n_times] | maxima 3xf64
//   u32 input_length | u32 input_channels | u32 n_layers
//   per layer: kind u8 | activation u8 | padding u8 | i32 filters | i32 kernel
//              | i32 pool | u64 units
//   u64 total parameter count | parameter blocks f64 (layer order, weight then bias)
//   u64 FNV-1a checksum
inline constexpr std::array<char, 8> kModelMagic = {'Q', 'D', 'L', 'M', 'D', 'L', 0, 0};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const std::string& path, SurrogateModel& model,
                       std::uint64_t config_digest) {
    BinaryWriter w;
    w.put(kModelMagic);
    w.put(kModelVersion);
    w.put(config_digest);
    w.put(static_cast<std::uint32_t>(model.n_sites));
    w.put(static_cast<std::uint64_t>(model.times_fs.size()));
    w.put_array(model.times_fs.data(), model.times_fs.size());
    w.put(model.lambda_max);
    w.put(model.gamma_max);
    w.put(model.temperature_max);
    w.put(static_cast<std::uint32_t>(model.net.input_length()));
    w.put(static_cast<std::uint32_t>(model.net.input_channels()));
    const auto& specs = model.net.specs();
    w.put(static_cast<std::uint32_t>(specs.size()));
    for (const auto& s : specs) {
        w.put(static_cast<std::uint8_t>(s.kind));
        w.put(static_cast<std::uint8_t>(s.activation));
        w.put(static_cast<std::uint8_t>(s.padding));
        w.put(static_cast<std::int32_t>(s.filters));
        w.put(static_cast<std::int32_t>(s.kernel_size));
        w.put(static_cast<std::int32_t>(s.pool_size));
        w.put(static_cast<std::uint64_t>(s.units));
    }
    w.put(static_cast<std::uint64_t>(model.net.parameter_count()));
    for (auto p : model.net.parameters()) w.put_array(p.value, p.size);
    w.save(path);
}

inline SurrogateModel load_model(const std::string& path, std::uint64_t* config_digest = nullptr) {
    BinaryReader r(path);
    r.verify_trailer();
    if (r.get<std::array<char, 8>>() != kModelMagic)
        throw std::runtime_error("not a model file: " + path);
    if (r.get<std::uint32_t>() != kModelVersion)
        throw std::runtime_error("unsupported model version in " + path);
    const auto digest = r.get<std::uint64_t>();
    if (config_digest) *config_digest = digest;

    SurrogateModel model;
    model.n_sites = static_cast<int>(r.get<std::uint32_t>());
    model.times_fs.resize(r.get<std::uint64_t>());
    r.get_array(model.times_fs.data(), model.times_fs.size());
    model.lambda_max = r.get<double>();
    model.gamma_max = r.get<double>();
    model.temperature_max = r.get<double>();
    const auto input_length = static_cast<int>(r.get<std::uint32_t>());
    const auto input_channels = static_cast<int>(r.get<std::uint32_t>());
    const auto n_layers = r.get<std::uint32_t>();
    std::vector<LayerSpec> specs(n_layers);
    for (auto& s : specs) {
        s.kind = static_cast<LayerSpec::Kind>(r.get<std::uint8_t>());
        s.activation = static_cast<Activation>(r.get<std::uint8_t>());
        s.padding = static_cast<Padding>(r.get<std::uint8_t>());
        s.filters = r.get<std::int32_t>();
        s.kernel_size = r.get<std::int32_t>();
        s.pool_size = r.get<std::int32_t>();
        s.units = r.get<std::uint64_t>();
    }
    model.net = Model(std::move(specs), input_length, input_channels);
    const auto expected_params = r.get<std::uint64_t>();
    if (expected_params != model.net.parameter_count())
        throw std::runtime_error("model file: parameter count mismatch in " + path);
    for (auto p : model.net.parameters()) r.get_array(p.value, p.size);
    if (r.remaining() != 0) throw std::runtime_error("trailing bytes in " + path);
    return model;
}

}  // namespace qdlearn
