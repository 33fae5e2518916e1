// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#define BHCOOP_VERSION "0.1.0"

namespace bhcoop {
inline constexpr const char* kVersion = BHCOOP_VERSION;
}
