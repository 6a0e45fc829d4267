#pragma once

#define LUMPGEO_VERSION "0.1.0"

namespace lumpgeo {
inline constexpr const char* version = LUMPGEO_VERSION;
}
