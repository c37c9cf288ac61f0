#pragma once

#include <filesystem>
#include <vector>

#include "thetarbm/rbm.hpp"

namespace thetarbm {

// Binary checkpoint layout (all integers and floats little-endian):
//   "TRBM" | u32 version | u32 H | u32 V | u32 S | u32 side
//   | u8 unit_type | u8 model_kind | f64[S] angles
//   | f64[S*H*V] W (slice-major, then row-major) | f64[H] b | f64[V] c
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ThetaRbmModel& m);
ThetaRbmModel deserialize_model(std::vector<std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const ThetaRbmModel& m);
ThetaRbmModel load_model(const std::filesystem::path& path);

}  // namespace thetarbm
