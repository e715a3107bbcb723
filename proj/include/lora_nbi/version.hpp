#pragma once

namespace lora_nbi {

inline constexpr const char* kVersion = "0.3.0";

// Bumped whenever a CSV/JSON column is added, removed, or reformatted.
inline constexpr int kSchemaVersion = 1;

}  // namespace lora_nbi
