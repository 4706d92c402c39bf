#include "iqsim/modem/modem.hpp"

namespace iqsim {

IQBuffer modulate(const Frame &f, const ModemParams &params) {
    if (const auto *c = std::get_if<CssParams>(&params)) {
        return css_modulate_frame(f, *c);
    }
    if (const auto *k = std::get_if<FskParams>(&params)) {
        return fsk_modulate_frame(f, *k);
    }
    return dbpsk_modulate_frame(f, std::get<DbpskParams>(params));
}

} // namespace iqsim
