#pragma once

namespace hyperspec {
inline constexpr const char* kVersion = "1.0.0";
}
