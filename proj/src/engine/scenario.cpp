#include "iqsim/engine.hpp"

#include "iqsim/errors.hpp"
#include "iqsim/modem/frame.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace iqsim {

using json = nlohmann::ordered_json;

namespace {

// Strips the "path: " prefix a validation_error puts in what().
std::string bare_message(const validation_error &e) {
    const std::string what = e.what();
    const std::string prefix = e.path() + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

// Re-roots a sub-object's validation error under `prefix`.
template <typename F>
void under(const std::string &prefix, F &&fn, const std::string &who = "") {
    try {
        fn();
    } catch (const validation_error &e) {
        const auto dot = e.path().find('.');
        const std::string leaf = dot == std::string::npos ? e.path() : e.path().substr(dot + 1);
        throw validation_error(prefix + "." + leaf, who + bare_message(e));
    } catch (const domain_error &e) {
        throw validation_error(prefix, who + e.what());
    }
}

bool finite(double v) { return std::isfinite(v); }

// ------------------------------------------------------------ reader

// Object view that tracks the JSON path and rejects unknown keys.
class Obj {
public:
    Obj(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw validation_error(path_.empty() ? "$" : path_, "expected an object");
    }

    std::string at(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string &key) const { return j_.contains(key); }

    double num(const std::string &key, std::optional<double> def = std::nullopt) {
        const json *v = find(key);
        if (!v) return need(key, def);
        if (v->is_string() && v->get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
        if (!v->is_number()) throw validation_error(at(key), "expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string &key, std::optional<std::int64_t> def = std::nullopt) {
        const json *v = find(key);
        if (!v) return need(key, def);
        if (!v->is_number_integer()) throw validation_error(at(key), "expected an integer");
        return v->get<std::int64_t>();
    }

    std::uint64_t uinteger(const std::string &key, std::optional<std::uint64_t> def = std::nullopt) {
        const json *v = find(key);
        if (!v) return need(key, def);
        if (!v->is_number_unsigned()) throw validation_error(at(key), "expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string &key, std::optional<bool> def = std::nullopt) {
        const json *v = find(key);
        if (!v) return need(key, def);
        if (!v->is_boolean()) throw validation_error(at(key), "expected true or false");
        return v->get<bool>();
    }

    std::string str(const std::string &key, std::optional<std::string> def = std::nullopt) {
        const json *v = find(key);
        if (!v) return need(key, def);
        if (!v->is_string()) throw validation_error(at(key), "expected a string");
        return v->get<std::string>();
    }

    Obj obj(const std::string &key) {
        const json *v = find(key);
        if (!v) throw validation_error(at(key), "required field is missing");
        return Obj(*v, at(key));
    }

    std::optional<Obj> maybe_obj(const std::string &key) {
        const json *v = find(key);
        if (!v) return std::nullopt;
        return Obj(*v, at(key));
    }

    const json &array(const std::string &key, bool required = true) {
        static const json empty = json::array();
        const json *v = find(key);
        if (!v) {
            if (required) throw validation_error(at(key), "required field is missing");
            return empty;
        }
        if (!v->is_array()) throw validation_error(at(key), "expected an array");
        return *v;
    }

    // Every key must have been consumed.
    void done() const {
        for (const auto &[k, v] : j_.items()) {
            if (!used_.count(k)) throw validation_error(at(k), "unknown field");
        }
    }

private:
    const json *find(const std::string &key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    template <typename T>
    T need(const std::string &key, const std::optional<T> &def) const {
        if (!def) throw validation_error(at(key), "required field is missing");
        return *def;
    }

    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

Position read_position(Obj &o, const std::string &key) {
    const json &a = o.array(key);
    if (a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw validation_error(o.at(key), "expected [x, y] in meters");
    }
    return {a[0].get<double>(), a[1].get<double>()};
}

ModemParams read_modem(Obj o) {
    const std::string type = o.str("type");
    ModemParams p;
    if (type == "css") {
        CssParams c;
        c.spreading_factor = static_cast<int>(o.integer("spreading_factor", c.spreading_factor));
        c.chirp_bandwidth_hz = o.num("chirp_bandwidth_hz", c.chirp_bandwidth_hz);
        c.preamble_upchirps = static_cast<int>(o.integer("preamble_upchirps", c.preamble_upchirps));
        c.detect_windows = static_cast<int>(o.integer("detect_windows", c.detect_windows));
        c.detect_peak_to_mean = o.num("detect_peak_to_mean", c.detect_peak_to_mean);
        p = c;
    } else if (type == "fsk") {
        FskParams f;
        f.bit_rate_bps = o.num("bit_rate_bps", f.bit_rate_bps);
        f.deviation_hz = o.num("deviation_hz", f.deviation_hz);
        f.native_rate_hz = o.num("native_rate_hz", f.native_rate_hz);
        f.sync_max_bit_errors = static_cast<int>(o.integer("sync_max_bit_errors", f.sync_max_bit_errors));
        p = f;
    } else if (type == "dbpsk") {
        DbpskParams d;
        d.bit_rate_bps = o.num("bit_rate_bps", d.bit_rate_bps);
        d.native_rate_hz = o.num("native_rate_hz", d.native_rate_hz);
        d.sync_max_bit_errors = static_cast<int>(o.integer("sync_max_bit_errors", d.sync_max_bit_errors));
        p = d;
    } else {
        throw validation_error(o.at("type"), "unknown modem type '" + type + "' (css, fsk, dbpsk)");
    }
    o.done();
    return p;
}

json write_modem(const ModemParams &p) {
    return std::visit(
        [](const auto &m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CssParams>) {
                return {{"type", "css"},
                        {"spreading_factor", m.spreading_factor},
                        {"chirp_bandwidth_hz", m.chirp_bandwidth_hz},
                        {"preamble_upchirps", m.preamble_upchirps},
                        {"detect_windows", m.detect_windows},
                        {"detect_peak_to_mean", m.detect_peak_to_mean}};
            } else if constexpr (std::is_same_v<T, FskParams>) {
                return {{"type", "fsk"},
                        {"bit_rate_bps", m.bit_rate_bps},
                        {"deviation_hz", m.deviation_hz},
                        {"native_rate_hz", m.native_rate_hz},
                        {"sync_max_bit_errors", m.sync_max_bit_errors}};
            } else {
                return {{"type", "dbpsk"},
                        {"bit_rate_bps", m.bit_rate_bps},
                        {"native_rate_hz", m.native_rate_hz},
                        {"sync_max_bit_errors", m.sync_max_bit_errors}};
            }
        },
        p);
}

std::vector<std::uint8_t> parse_hex(const std::string &hex, const std::string &path) {
    if (hex.size() % 2 != 0) throw validation_error(path, "hex string must have an even number of digits");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        unsigned v = 0;
        for (std::size_t k = 0; k < 2; ++k) {
            const char c = hex[i + k];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
            else throw validation_error(path, std::string("not a hex digit: '") + c + "'");
        }
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::string to_hex(const std::vector<std::uint8_t> &bytes) {
    static const char *digits = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

TrafficSpec read_traffic(Obj o) {
    TrafficSpec t;
    const std::string type = o.str("type");
    if (type == "periodic") {
        t.kind = TrafficSpec::Kind::periodic;
        t.interval_s = o.num("interval_s");
        t.jitter_s = o.num("jitter_s", 0.0);
        t.first_s = o.num("first_s", 0.0);
    } else if (type == "poisson") {
        t.kind = TrafficSpec::Kind::poisson;
        t.rate_per_s = o.num("rate_per_s");
    } else if (type == "explicit") {
        t.kind = TrafficSpec::Kind::explicit_times;
        const json &a = o.array("times_s");
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) throw validation_error(o.at("times_s") + "[" + std::to_string(i) + "]", "expected a number");
            t.times_s.push_back(a[i].get<double>());
        }
    } else {
        throw validation_error(o.at("type"), "unknown traffic type '" + type + "' (periodic, poisson, explicit)");
    }
    o.done();
    return t;
}

json write_traffic(const TrafficSpec &t) {
    switch (t.kind) {
    case TrafficSpec::Kind::periodic:
        return {{"type", "periodic"}, {"interval_s", t.interval_s}, {"jitter_s", t.jitter_s}, {"first_s", t.first_s}};
    case TrafficSpec::Kind::poisson:
        return {{"type", "poisson"}, {"rate_per_s", t.rate_per_s}};
    case TrafficSpec::Kind::explicit_times:
        return {{"type", "explicit"}, {"times_s", t.times_s}};
    }
    return {};
}

PayloadSpec read_payload(Obj o) {
    PayloadSpec p;
    const std::string type = o.str("type");
    if (type == "random") {
        p.kind = PayloadSpec::Kind::random;
        p.length = o.uinteger("length");
    } else if (type == "fixed") {
        p.kind = PayloadSpec::Kind::fixed;
        p.bytes = parse_hex(o.str("hex"), o.at("hex"));
    } else {
        throw validation_error(o.at("type"), "unknown payload type '" + type + "' (random, fixed)");
    }
    o.done();
    return p;
}

json write_payload(const PayloadSpec &p) {
    if (p.kind == PayloadSpec::Kind::fixed) return {{"type", "fixed"}, {"hex", to_hex(p.bytes)}};
    return {{"type", "random"}, {"length", p.length}};
}

ImpairmentSpec read_impairments(Obj o) {
    ImpairmentSpec s;
    s.cfo_hz = o.num("cfo_hz", 0.0);
    s.phase_noise_linewidth_hz = o.num("phase_noise_linewidth_hz", 0.0);
    if (o.has("tx_saturation_amplitude")) s.tx_saturation_amplitude = o.num("tx_saturation_amplitude");
    s.rapp_smoothness = o.num("rapp_smoothness", s.rapp_smoothness);
    o.done();
    return s;
}

json write_impairments(const ImpairmentSpec &s) {
    json j = {{"cfo_hz", s.cfo_hz}, {"phase_noise_linewidth_hz", s.phase_noise_linewidth_hz}};
    if (s.tx_saturation_amplitude) j["tx_saturation_amplitude"] = *s.tx_saturation_amplitude;
    j["rapp_smoothness"] = s.rapp_smoothness;
    return j;
}

json write_number(double v) {
    if (std::isinf(v) && v < 0) return "-inf";
    return v;
}

DeviceSpec read_device(Obj o) {
    DeviceSpec d;
    d.id = static_cast<std::uint32_t>(o.uinteger("id"));
    d.position = read_position(o, "position");
    if (auto m = o.maybe_obj("modem")) d.modem = read_modem(*m);
    if (auto r = o.maybe_obj("replay")) {
        ReplaySpec rs;
        rs.path = r->str("path");
        rs.gain_db = r->num("gain_db", 0.0);
        r->done();
        d.replay = rs;
    }
    d.carrier_offset_hz = o.num("carrier_offset_hz", 0.0);
    d.tx_power_dbm = o.num("tx_power_dbm", d.tx_power_dbm);
    if (auto i = o.maybe_obj("impairments")) d.impairments = read_impairments(*i);
    d.traffic = read_traffic(o.obj("traffic"));
    if (auto p = o.maybe_obj("payload")) d.payload = read_payload(*p);
    o.done();
    return d;
}

GatewaySpec read_gateway(Obj o) {
    GatewaySpec g;
    g.id = static_cast<std::uint32_t>(o.uinteger("id"));
    g.position = read_position(o, "position");
    const json &ls = o.array("listeners", false);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        Obj l(ls[i], o.at("listeners") + "[" + std::to_string(i) + "]");
        ListenerSpec spec;
        spec.carrier_offset_hz = l.num("carrier_offset_hz", 0.0);
        spec.modem = read_modem(l.obj("modem"));
        l.done();
        g.listeners.push_back(spec);
    }
    if (auto d = o.maybe_obj("delivery")) {
        const std::string type = d->str("type");
        if (type == "in_process") {
            g.delivery.kind = DeliverySpec::Kind::in_process;
        } else if (type == "file") {
            g.delivery.kind = DeliverySpec::Kind::file;
            g.delivery.target = d->str("path");
        } else if (type == "socket") {
            g.delivery.kind = DeliverySpec::Kind::socket;
            g.delivery.target = d->str("endpoint");
        } else {
            throw validation_error(d->at("type"), "unknown delivery type '" + type + "' (in_process, file, socket)");
        }
        d->done();
    }
    o.done();
    return g;
}

} // namespace

double distance_m(const Position &a, const Position &b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

// ------------------------------------------------------------ validation

void TrafficSpec::validate(const std::string &path, double duration_s) const {
    switch (kind) {
    case Kind::periodic:
        if (!(interval_s > 0.0) || !finite(interval_s)) throw validation_error(path + ".interval_s", "must be > 0");
        if (!(jitter_s >= 0.0) || !finite(jitter_s)) throw validation_error(path + ".jitter_s", "must be >= 0");
        if (!(first_s >= 0.0) || !(first_s <= duration_s)) {
            throw validation_error(path + ".first_s", "must lie within [0, duration_s]");
        }
        break;
    case Kind::poisson:
        if (!(rate_per_s >= 0.0) || !finite(rate_per_s)) throw validation_error(path + ".rate_per_s", "must be >= 0");
        break;
    case Kind::explicit_times:
        for (std::size_t i = 0; i < times_s.size(); ++i) {
            if (!(times_s[i] >= 0.0) || !(times_s[i] <= duration_s)) {
                throw validation_error(path + ".times_s[" + std::to_string(i) + "]", "must lie within [0, duration_s]");
            }
        }
        break;
    }
}

void PayloadSpec::validate(const std::string &path) const {
    const std::size_t n = size();
    if (n < 1 || n > kMaxPayload) {
        throw validation_error(path + (kind == Kind::fixed ? ".hex" : ".length"),
                               "payload must be 1.." + std::to_string(kMaxPayload) + " bytes");
    }
}

void Scenario::validate() const {
    if (schema_version != kScenarioSchemaVersion) {
        throw validation_error("schema_version", "unsupported version " + std::to_string(schema_version));
    }
    if (!(duration_s > 0.0) || !finite(duration_s)) throw validation_error("duration_s", "must be > 0");
    band.validate();
    if (!finite(calibration.full_scale_dbm)) throw validation_error("calibration.full_scale_dbm", "must be finite");
    noise.validate();
    channel_model.validate();
    under("resampler", [&] { resampler.validate(); });
    if (block_samples < 1) throw validation_error("engine.block_samples", "must be >= 1");
    baseline.rule.validate();

    if (gateways.empty()) throw validation_error("gateways", "at least one gateway is required");

    std::set<std::uint32_t> ids;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const auto &d = devices[i];
        const std::string path = "devices[" + std::to_string(i) + "]";
        const std::string who = "device " + std::to_string(d.id) + ": ";
        if (!ids.insert(d.id).second) throw validation_error(path + ".id", who + "duplicate device id");
        if (d.modem.has_value() == d.replay.has_value()) {
            throw validation_error(path, who + "exactly one of 'modem' and 'replay' is required");
        }
        if (!(d.tx_power_dbm >= -20.0 && d.tx_power_dbm <= 30.0)) {
            throw validation_error(path + ".tx_power_dbm", who + "must lie within [-20, +30] dBm");
        }
        if (!finite(d.position.x) || !finite(d.position.y)) {
            throw validation_error(path + ".position", who + "must be finite");
        }
        if (d.modem) {
            under(path + ".modem", [&] { iqsim::validate(*d.modem); }, who);
            const double width = native_rate_hz(*d.modem);
            if (!finite(d.carrier_offset_hz) || !band.contains(d.carrier_offset_hz, width)) {
                throw validation_error(path + ".carrier_offset_hz",
                                       who + "channel at " + std::to_string(d.carrier_offset_hz) + " Hz (" +
                                           std::to_string(width) + " Hz wide) is outside the band");
            }
            if (!(std::abs(d.impairments.cfo_hz) < width / 2)) {
                throw validation_error(path + ".impairments.cfo_hz", who + "must be below half the native rate");
            }
            d.payload.validate(path + ".payload");
        } else {
            if (d.replay->path.empty()) throw validation_error(path + ".replay.path", who + "must not be empty");
            if (std::isnan(d.replay->gain_db) || d.replay->gain_db == std::numeric_limits<double>::infinity()) {
                throw validation_error(path + ".replay.gain_db", who + "must be finite or -inf");
            }
            if (!finite(d.carrier_offset_hz)) throw validation_error(path + ".carrier_offset_hz", who + "must be finite");
        }
        under(path + ".impairments", [&] { d.impairments.validate(); }, who);
        d.traffic.validate(path + ".traffic", duration_s);
    }

    ids.clear();
    for (std::size_t i = 0; i < gateways.size(); ++i) {
        const auto &g = gateways[i];
        const std::string path = "gateways[" + std::to_string(i) + "]";
        const std::string who = "gateway " + std::to_string(g.id) + ": ";
        if (!ids.insert(g.id).second) throw validation_error(path + ".id", who + "duplicate gateway id");
        if (!finite(g.position.x) || !finite(g.position.y)) {
            throw validation_error(path + ".position", who + "must be finite");
        }
        for (std::size_t k = 0; k < g.listeners.size(); ++k) {
            const auto &l = g.listeners[k];
            const std::string lp = path + ".listeners[" + std::to_string(k) + "]";
            under(lp + ".modem", [&] { iqsim::validate(l.modem); }, who);
            if (!finite(l.carrier_offset_hz) || !band.contains(l.carrier_offset_hz, native_rate_hz(l.modem))) {
                throw validation_error(lp + ".carrier_offset_hz", who + "listener channel is outside the band");
            }
        }
        if (g.delivery.kind != DeliverySpec::Kind::in_process && g.delivery.target.empty()) {
            throw validation_error(path + ".delivery", who + "needs a target");
        }
        if (g.delivery.kind == DeliverySpec::Kind::socket && g.delivery.target.rfind("tcp://", 0) != 0) {
            throw validation_error(path + ".delivery.endpoint", who + "expected tcp://host:port");
        }
    }
}

const DeviceSpec &Scenario::device(std::uint32_t id) const {
    for (const auto &d : devices) {
        if (d.id == id) return d;
    }
    throw domain_error("no device with id " + std::to_string(id));
}

bool Scenario::operator==(const Scenario &o) const {
    return scenario_to_json(*this) == scenario_to_json(o);
}

// ------------------------------------------------------------ documents

Scenario parse_scenario(const std::string &json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw validation_error("$", std::string("not valid JSON: ") + e.what());
    }
    Obj root(doc, "");
    Scenario s;
    s.schema_version = static_cast<int>(root.integer("schema_version"));
    if (s.schema_version != kScenarioSchemaVersion) {
        throw validation_error("schema_version", "unsupported version " + std::to_string(s.schema_version));
    }
    s.name = root.str("name", "");
    s.description = root.str("description", "");
    s.seed = root.uinteger("seed", s.seed);
    s.duration_s = root.num("duration_s");

    if (auto b = root.maybe_obj("band")) {
        s.band.center_frequency_hz = b->num("center_frequency_hz", s.band.center_frequency_hz);
        s.band.stream_rate_hz = b->num("stream_rate_hz", s.band.stream_rate_hz);
        s.band.usable_bandwidth_hz = b->num("usable_bandwidth_hz", s.band.stream_rate_hz);
        b->done();
    }
    if (auto c = root.maybe_obj("calibration")) {
        s.calibration.full_scale_dbm = c->num("full_scale_dbm", s.calibration.full_scale_dbm);
        c->done();
    }
    if (auto n = root.maybe_obj("noise")) {
        s.noise.density_dbm_per_hz = n->num("density_dbm_per_hz", s.noise.density_dbm_per_hz);
        s.noise.receiver_noise_figure_db = n->num("noise_figure_db", s.noise.receiver_noise_figure_db);
        s.noise.enabled = n->boolean("enabled", true);
        n->done();
    }
    if (auto c = root.maybe_obj("channel_model")) {
        const std::string type = c->str("type", "log_distance");
        if (type != "log_distance") throw validation_error(c->at("type"), "only log_distance is supported");
        auto &m = s.channel_model;
        m.reference_loss_db = c->num("reference_loss_db", m.reference_loss_db);
        m.reference_distance_m = c->num("reference_distance_m", m.reference_distance_m);
        m.exponent = c->num("exponent", m.exponent);
        m.shadowing_sigma_db = c->num("shadowing_sigma_db", m.shadowing_sigma_db);
        c->done();
    }
    if (auto r = root.maybe_obj("resampler")) {
        s.resampler.taps_per_phase = static_cast<int>(r->integer("taps_per_phase", s.resampler.taps_per_phase));
        s.resampler.num_phases = static_cast<int>(r->integer("num_phases", s.resampler.num_phases));
        s.resampler.kaiser_beta = r->num("kaiser_beta", s.resampler.kaiser_beta);
        r->done();
    }
    if (auto e = root.maybe_obj("engine")) {
        s.block_samples = e->uinteger("block_samples", s.block_samples);
        e->done();
    }
    if (auto b = root.maybe_obj("baseline")) {
        s.baseline.enabled = b->boolean("enabled", true);
        if (auto t = b->maybe_obj("thresholds_db")) {
            auto &r = s.baseline.rule;
            r.css_threshold_db = t->num("css", r.css_threshold_db);
            r.fsk_threshold_db = t->num("fsk", r.fsk_threshold_db);
            r.dbpsk_threshold_db = t->num("dbpsk", r.dbpsk_threshold_db);
            r.other_threshold_db = t->num("other", r.other_threshold_db);
            t->done();
        }
        b->done();
    }
    const json &devs = root.array("devices", false);
    for (std::size_t i = 0; i < devs.size(); ++i) {
        s.devices.push_back(read_device(Obj(devs[i], "devices[" + std::to_string(i) + "]")));
    }
    const json &gws = root.array("gateways");
    for (std::size_t i = 0; i < gws.size(); ++i) {
        s.gateways.push_back(read_gateway(Obj(gws[i], "gateways[" + std::to_string(i) + "]")));
    }
    root.done();
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw validation_error("$", "cannot read scenario file " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    Scenario s = parse_scenario(text.str());
    // Replay paths are relative to the scenario file.
    for (auto &d : s.devices) {
        if (d.replay && std::filesystem::path(d.replay->path).is_relative()) {
            d.replay->path = (path.parent_path() / d.replay->path).lexically_normal().string();
        }
    }
    return s;
}

std::string scenario_to_json(const Scenario &s, int indent) {
    json j;
    j["schema_version"] = s.schema_version;
    j["name"] = s.name;
    j["description"] = s.description;
    j["seed"] = s.seed;
    j["duration_s"] = s.duration_s;
    j["band"] = {{"center_frequency_hz", s.band.center_frequency_hz},
                 {"stream_rate_hz", s.band.stream_rate_hz},
                 {"usable_bandwidth_hz", s.band.usable_bandwidth_hz}};
    j["calibration"] = {{"full_scale_dbm", s.calibration.full_scale_dbm}};
    j["noise"] = {{"density_dbm_per_hz", s.noise.density_dbm_per_hz},
                  {"noise_figure_db", s.noise.receiver_noise_figure_db},
                  {"enabled", s.noise.enabled}};
    j["channel_model"] = {{"type", "log_distance"},
                          {"reference_loss_db", s.channel_model.reference_loss_db},
                          {"reference_distance_m", s.channel_model.reference_distance_m},
                          {"exponent", s.channel_model.exponent},
                          {"shadowing_sigma_db", s.channel_model.shadowing_sigma_db}};
    j["resampler"] = {{"taps_per_phase", s.resampler.taps_per_phase},
                      {"num_phases", s.resampler.num_phases},
                      {"kaiser_beta", s.resampler.kaiser_beta}};
    j["engine"] = {{"block_samples", s.block_samples}};
    j["baseline"] = {{"enabled", s.baseline.enabled},
                     {"thresholds_db",
                      {{"css", s.baseline.rule.css_threshold_db},
                       {"fsk", s.baseline.rule.fsk_threshold_db},
                       {"dbpsk", s.baseline.rule.dbpsk_threshold_db},
                       {"other", s.baseline.rule.other_threshold_db}}}};
    json devs = json::array();
    for (const auto &d : s.devices) {
        json dj;
        dj["id"] = d.id;
        dj["position"] = {d.position.x, d.position.y};
        if (d.modem) dj["modem"] = write_modem(*d.modem);
        if (d.replay) dj["replay"] = {{"path", d.replay->path}, {"gain_db", write_number(d.replay->gain_db)}};
        dj["carrier_offset_hz"] = d.carrier_offset_hz;
        dj["tx_power_dbm"] = d.tx_power_dbm;
        dj["impairments"] = write_impairments(d.impairments);
        dj["traffic"] = write_traffic(d.traffic);
        dj["payload"] = write_payload(d.payload);
        devs.push_back(dj);
    }
    j["devices"] = devs;
    json gws = json::array();
    for (const auto &g : s.gateways) {
        json gj;
        gj["id"] = g.id;
        gj["position"] = {g.position.x, g.position.y};
        json ls = json::array();
        for (const auto &l : g.listeners) {
            ls.push_back({{"carrier_offset_hz", l.carrier_offset_hz}, {"modem", write_modem(l.modem)}});
        }
        gj["listeners"] = ls;
        switch (g.delivery.kind) {
        case DeliverySpec::Kind::in_process:
            gj["delivery"] = {{"type", "in_process"}};
            break;
        case DeliverySpec::Kind::file:
            gj["delivery"] = {{"type", "file"}, {"path", g.delivery.target}};
            break;
        case DeliverySpec::Kind::socket:
            gj["delivery"] = {{"type", "socket"}, {"endpoint", g.delivery.target}};
            break;
        }
        gws.push_back(gj);
    }
    j["gateways"] = gws;
    return j.dump(indent);
}

} // namespace iqsim
