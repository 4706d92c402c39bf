#pragma once

#include <spdlog/spdlog.h>

namespace iqsim {

// Reads IQSIM_LOG (trace|debug|info|warn|error|off, default warn) once and
// applies it to the default spdlog logger. Safe to call repeatedly.
void init_logging();

} // namespace iqsim
