#pragma once

// JSON forms of the configuration types, model checkpoints and small file
// helpers. Malformed input raises ConfigError; unreadable or unwritable files
// raise IoError.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tiltdiff/diffusion.hpp"
#include "tiltdiff/synthdata.hpp"
#include "tiltdiff/tilt.hpp"

namespace tiltdiff {

using Json = nlohmann::json;

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where);

/// {"family": "exponential" | "escort" | "q_exponential", family parameters,
///  "theta": array or scalar, "g": "identity" | "coordinate_mean" |
///  {"linear_map": {"rows", "cols", "b"}}, "g_max": number}. A scalar theta is
/// broadcast to the output dimension of g on `input_dim`-dimensional data.
TiltSpec tilt_from_json(const Json& j, std::size_t input_dim);
Json to_json(const TiltSpec& tilt);

/// {"d", "seed", "normalization": "row" | "column", optional "alpha", "beta",
/// "A"}: generated from the seed, then overridden by any explicit field.
BetaMixSpec beta_mix_from_json(const Json& j);
Json to_json(const BetaMixSpec& spec);

NoiseSchedule schedule_from_json(const Json& j);
Json to_json(const NoiseSchedule& schedule);

ModelShape shape_from_json(const Json& j);
Json to_json(const ModelShape& shape);

/// Fields missing from `j` keep the values in `base`.
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
Json to_json(const TrainConfig& config);

struct Checkpoint {
    DenoiserModel model;
    NoiseSchedule schedule;
    TrainConfig config;
};

Json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "step,loss" header plus one row per entry.
std::string format_loss_trace(const LossTrace& trace);

Json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

}  // namespace tiltdiff
