#pragma once

namespace krein {

inline constexpr const char* version = "0.1.0";

}  // namespace krein
