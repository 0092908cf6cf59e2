#pragma once

#include "fdindex/errors.hpp"
#include "fdindex/linalg.hpp"
#include "fdindex/groups.hpp"
#include "fdindex/algebra.hpp"
#include "fdindex/expectation.hpp"
#include "fdindex/pimsner.hpp"
#include "fdindex/basic.hpp"
#include "fdindex/angle.hpp"
#include "fdindex/presets.hpp"

namespace fdindex {

inline constexpr const char* version = "0.1.0";

}  // namespace fdindex
