#pragma once

namespace acqsens {

inline constexpr const char* kVersion = "0.1.0";

} // namespace acqsens
