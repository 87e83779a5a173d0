#pragma once

namespace impact_game {

inline constexpr const char* kVersion = "0.1.0";

} // namespace impact_game
