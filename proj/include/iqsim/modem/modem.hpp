#pragma once

#include "iqsim/modem/css.hpp"
#include "iqsim/modem/dbpsk.hpp"
#include "iqsim/modem/demodulator.hpp"
#include "iqsim/modem/frame.hpp"
#include "iqsim/modem/fsk.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// Unit-magnitude baseband frame at the modem's native rate, start_sample 0.
IQBuffer modulate(const Frame &f, const ModemParams &params);

} // namespace iqsim
