#pragma once
#include <cstdint>

namespace incmesh {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kReportSchemaVersion = 1;
inline constexpr std::uint32_t kRasterVersion = 1;

}  // namespace incmesh
