#pragma once

namespace fedsim {

inline constexpr const char* kArtifactVersion = "fedsim-0.1.0";

}  // namespace fedsim
