// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace isorecon {

namespace {
using json = nlohmann::json;
constexpr char kMagic[8] = {'I', 'S', 'O', 'R', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string checkpoint_metadata_json(const DenoiserCheckpoint& ckpt) {
    json meta;
    meta["format"] = "isorecon-checkpoint";
    meta["schedule"] = {{"kind", ckpt.schedule_kind}, {"T", ckpt.schedule_T}, {"s", ckpt.schedule_s}};
    meta["normalization"] = {{"lo", ckpt.value_lo}, {"hi", ckpt.value_hi}};
    meta["denoiser"] = {{"in_size", ckpt.config.in_size},
                        {"base_channels", ckpt.config.base_channels},
                        {"channel_multipliers", ckpt.config.channel_multipliers},
                        {"attention_stages", ckpt.config.attention_stages},
                        {"time_embed_dim", ckpt.config.time_embed_dim},
                        {"res_per_stage", ckpt.config.res_per_stage}};
    meta["train"] = {{"seed", ckpt.seed},
                     {"steps", ckpt.trained_steps},
                     {"dataset_fingerprint", ckpt.dataset_fingerprint}};
    json tensors = json::array();
    for (const auto& t : ckpt.manifest)
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    meta["tensors"] = std::move(tensors);
    return meta.dump(2);
}

void save_checkpoint(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt) {
    std::int64_t expected = 0;
    for (const auto& t : ckpt.manifest) expected += static_cast<std::int64_t>(t.rows) * t.cols;
    detail::require(static_cast<std::int64_t>(ckpt.raw.size()) == expected &&
                        ckpt.ema.size() == ckpt.raw.size(),
                    "checkpoint payload does not match its manifest");

    const std::string meta = checkpoint_metadata_json(ckpt);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    detail::require_runtime(f.good(), "cannot open for writing: " + path.string());
    f.write(kMagic, sizeof kMagic);
    auto write_u32 = [&f](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto write_u64 = [&f](std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    write_u32(kVersion);
    write_u64(meta.size());
    f.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    f.write(reinterpret_cast<const char*>(ckpt.raw.data()),
            static_cast<std::streamsize>(ckpt.raw.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(ckpt.ema.data()),
            static_cast<std::streamsize>(ckpt.ema.size() * sizeof(float)));
    detail::require_runtime(f.good(), "short write: " + path.string());
}

DenoiserCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    detail::require_runtime(f.good(), "cannot open: " + path.string());

    char magic[8];
    f.read(magic, 8);
    detail::require_runtime(f.good() && std::memcmp(magic, kMagic, 8) == 0,
                            "not an isorecon checkpoint: " + path.string());
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    detail::require_runtime(version == kVersion, "unsupported checkpoint version");
    std::uint64_t meta_len = 0;
    f.read(reinterpret_cast<char*>(&meta_len), 8);
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    detail::require_runtime(f.good(), "truncated checkpoint: " + path.string());

    const json meta = json::parse(meta_str);
    DenoiserCheckpoint ckpt;
    ckpt.schedule_kind = meta.at("schedule").at("kind").get<std::string>();
    ckpt.schedule_T = meta.at("schedule").at("T").get<int>();
    ckpt.schedule_s = meta.at("schedule").at("s").get<double>();
    ckpt.value_lo = meta.at("normalization").at("lo").get<double>();
    ckpt.value_hi = meta.at("normalization").at("hi").get<double>();
    const auto& d = meta.at("denoiser");
    ckpt.config.in_size = d.at("in_size").get<int>();
    ckpt.config.base_channels = d.at("base_channels").get<int>();
    ckpt.config.channel_multipliers = d.at("channel_multipliers").get<std::vector<int>>();
    ckpt.config.attention_stages = d.at("attention_stages").get<std::vector<int>>();
    ckpt.config.time_embed_dim = d.at("time_embed_dim").get<int>();
    ckpt.config.res_per_stage = d.at("res_per_stage").get<int>();
    ckpt.seed = meta.at("train").at("seed").get<std::uint64_t>();
    ckpt.trained_steps = meta.at("train").at("steps").get<std::int64_t>();
    ckpt.dataset_fingerprint = meta.at("train").at("dataset_fingerprint").get<std::uint64_t>();

    std::int64_t total = 0;
    for (const auto& t : meta.at("tensors")) {
        TensorShape ts{t.at("name").get<std::string>(), t.at("rows").get<int>(),
                       t.at("cols").get<int>()};
        total += static_cast<std::int64_t>(ts.rows) * ts.cols;
        ckpt.manifest.push_back(std::move(ts));
    }

    ckpt.raw.resize(static_cast<std::size_t>(total));
    ckpt.ema.resize(static_cast<std::size_t>(total));
    f.read(reinterpret_cast<char*>(ckpt.raw.data()),
           static_cast<std::streamsize>(ckpt.raw.size() * sizeof(float)));
    f.read(reinterpret_cast<char*>(ckpt.ema.data()),
           static_cast<std::streamsize>(ckpt.ema.size() * sizeof(float)));
    detail::require_runtime(f.good(), "truncated checkpoint payload: " + path.string());
    return ckpt;
}

}  // namespace isorecon
