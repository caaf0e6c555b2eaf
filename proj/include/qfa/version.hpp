#pragma once

namespace qfa {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kResultSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

}  // namespace qfa
