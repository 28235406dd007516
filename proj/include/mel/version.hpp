#pragma once

namespace mel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mel
