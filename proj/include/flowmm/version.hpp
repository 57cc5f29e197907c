#pragma once

namespace flowmm {
inline constexpr const char* kVersion = "0.1.0";
}
