#pragma once

namespace bssr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bssr
