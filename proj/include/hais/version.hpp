#pragma once

namespace hais {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hais
