#pragma once

namespace omda {
inline constexpr const char* kArtifactVersion = "0.1.0";
}
