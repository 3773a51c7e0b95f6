#include "sotmlp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sotmlp/errors.hpp"

namespace sotmlp {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw ConfigError(key + ": trailing characters in '" + value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1")
        return true;
    if (value == "off" || value == "false" || value == "0")
        return false;
    throw ConfigError(key + ": expected on/off, got '" + value + "'");
}

// Scales a decimal literal by 10^shift in string space, so the strtod that
// follows is the only rounding step. Multiplying the parsed double by a
// power-of-ten factor instead would not invert exactly on serialization.
std::string shift_exponent(const std::string& s, int shift) {
    const auto e = s.find_first_of("eE");
    const std::string mantissa = e == std::string::npos ? s : s.substr(0, e);
    long exp = 0;
    if (e != std::string::npos)
        exp = std::stol(s.substr(e + 1));
    return mantissa + "e" + std::to_string(exp + shift);
}

// Parses a value expressed in a 10^shift multiple of the stored unit
// (e.g. nm -> m is shift -9).
double parse_scaled(const std::string& key, const std::string& value, int shift) {
    parse_double(key, value);  // reject malformed input against the user's own text
    return parse_double(key, shift_exponent(value, shift));
}

// Inverse of parse_scaled: renders v * 10^shift exactly, preferring plain
// decimal notation. Works on the shortest round-trip form of v, so parsing the
// result recovers v bit-for-bit.
std::string format_scaled(double v, int shift) {
    const std::string s = format_double(v);
    if (!std::isfinite(v) || v == 0.0)
        return s;
    const bool neg = s.front() == '-';
    std::string body = neg ? s.substr(1) : s;
    const auto e = body.find_first_of("eE");
    long exp = 0;
    if (e != std::string::npos) {
        exp = std::stol(body.substr(e + 1));
        body = body.substr(0, e);
    }
    const auto dot = body.find('.');
    std::string digits = dot == std::string::npos ? body : body.substr(0, dot) + body.substr(dot + 1);
    long point = (dot == std::string::npos ? static_cast<long>(body.size())
                                           : static_cast<long>(dot)) + exp + shift;
    while (digits.size() > 1 && digits.front() == '0') {
        digits.erase(digits.begin());
        --point;
    }
    std::string out;
    if (point >= static_cast<long>(digits.size()) && point <= 17) {
        out = digits + std::string(point - digits.size(), '0');
    } else if (point > 0 && point < static_cast<long>(digits.size())) {
        out = digits.substr(0, point) + "." + digits.substr(point);
    } else if (point <= 0 && point > -5) {
        out = "0." + std::string(-point, '0') + digits;
    } else {
        out = digits.size() == 1 ? digits : digits.substr(0, 1) + "." + digits.substr(1);
        out += "e" + std::to_string(point - 1);
    }
    return neg ? "-" + out : out;
}

std::vector<std::size_t> parse_topology(const std::string& value) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("topology: empty layer size in '" + value + "'");
        sizes.push_back(static_cast<std::size_t>(parse_uint("topology", item)));
    }
    if (sizes.size() < 2)
        throw ConfigError("topology needs at least two comma-separated sizes");
    return sizes;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{})
        throw ConfigError("could not format value");
    return std::string(buf, ptr);
}

void apply_config_key(ExperimentConfig& config, const std::string& key, const std::string& value) {
    if (key == "topology") {
        config.topology = parse_topology(value);
    } else if (key == "device.mtj_length_nm") {
        config.device.mtj_length = parse_scaled(key, value, -9);
    } else if (key == "device.mtj_width_nm") {
        config.device.mtj_width = parse_scaled(key, value, -9);
    } else if (key == "device.hm_length_nm") {
        config.device.hm_length = parse_scaled(key, value, -9);
    } else if (key == "device.hm_width_nm") {
        config.device.hm_width = parse_scaled(key, value, -9);
    } else if (key == "device.hm_thickness_nm") {
        config.device.hm_thickness = parse_scaled(key, value, -9);
    } else if (key == "device.ra_product_ohm_um2") {
        config.device.ra_product = parse_scaled(key, value, -12);
    } else if (key == "device.v0") {
        config.device.v0 = parse_double(key, value);
    } else if (key == "device.tmr0") {
        config.device.tmr0 = parse_double(key, value);
    } else if (key == "device.temperature") {
        config.device.temperature = parse_double(key, value);
    } else if (key == "train.learning_rate") {
        config.train.learning_rate = parse_double(key, value);
    } else if (key == "train.epochs") {
        config.train.epochs = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "train.batch_size") {
        config.train.batch_size = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "train.binarization") {
        if (value == "deterministic")
            config.train.binarization = Binarization::Deterministic;
        else if (value == "stochastic")
            config.train.binarization = Binarization::Stochastic;
        else
            throw ConfigError("train.binarization: expected deterministic or stochastic, got '" +
                              value + "'");
    } else if (key == "train.delta_b") {
        config.train.delta_b = parse_double(key, value);
    } else if (key == "train.seed") {
        config.train.rng_seed = parse_uint(key, value);
    } else if (key == "analog.read_voltage") {
        config.read_voltage = parse_double(key, value);
    } else if (key == "analog.nonideal") {
        config.nonideal = parse_bool(key, value);
    } else if (key == "data.dir") {
        config.data_dir = value;
    } else if (key == "out.dir") {
        config.out_dir = value;
    } else if (key == "baseline.gpu_cycles_per_image") {
        config.gpu_cycles_per_image = parse_double(key, value);
    } else if (key == "power.per_neuron_uw") {
        config.per_neuron_power = parse_scaled(key, value, -6);
    } else if (key == "area.per_neuron_um2") {
        config.per_neuron_area = parse_scaled(key, value, -12);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_config_key(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return config;
}

ExperimentConfig load_config_file(const std::string& path, std::string* raw) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (raw)
        *raw = text;
    return parse_config_text(text);
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "topology = ";
    for (std::size_t i = 0; i < config.topology.size(); ++i)
        out << (i ? "," : "") << config.topology[i];
    out << "\n";
    out << "device.mtj_length_nm = " << format_scaled(config.device.mtj_length, 9) << "\n";
    out << "device.mtj_width_nm = " << format_scaled(config.device.mtj_width, 9) << "\n";
    out << "device.hm_length_nm = " << format_scaled(config.device.hm_length, 9) << "\n";
    out << "device.hm_width_nm = " << format_scaled(config.device.hm_width, 9) << "\n";
    out << "device.hm_thickness_nm = " << format_scaled(config.device.hm_thickness, 9) << "\n";
    out << "device.ra_product_ohm_um2 = " << format_scaled(config.device.ra_product, 12) << "\n";
    out << "device.v0 = " << format_double(config.device.v0) << "\n";
    out << "device.tmr0 = " << format_double(config.device.tmr0) << "\n";
    out << "device.temperature = " << format_double(config.device.temperature) << "\n";
    out << "train.learning_rate = " << format_double(config.train.learning_rate) << "\n";
    out << "train.epochs = " << config.train.epochs << "\n";
    out << "train.batch_size = " << config.train.batch_size << "\n";
    out << "train.binarization = "
        << (config.train.binarization == Binarization::Deterministic ? "deterministic"
                                                                     : "stochastic")
        << "\n";
    out << "train.delta_b = " << format_double(config.train.delta_b) << "\n";
    out << "train.seed = " << config.train.rng_seed << "\n";
    out << "analog.read_voltage = " << format_double(config.read_voltage) << "\n";
    out << "analog.nonideal = " << (config.nonideal ? "on" : "off") << "\n";
    if (!config.data_dir.empty())
        out << "data.dir = " << config.data_dir << "\n";
    out << "out.dir = " << config.out_dir << "\n";
    out << "baseline.gpu_cycles_per_image = " << format_double(config.gpu_cycles_per_image) << "\n";
    out << "power.per_neuron_uw = " << format_scaled(config.per_neuron_power, 6) << "\n";
    out << "area.per_neuron_um2 = " << format_scaled(config.per_neuron_area, 12) << "\n";
    return out.str();
}

void ExperimentConfig::validate() const {
    if (topology.size() < 2)
        throw ConfigError("topology needs at least input and output sizes");
    for (std::size_t s : topology)
        if (s == 0)
            throw ConfigError("topology layer sizes must be >= 1");
    try {
        device.validate();
        train.validate();
    } catch (const ValidationError& e) {
        // Bad values arriving through the config surface are config errors.
        throw ConfigError(e.what());
    }
    if (!(read_voltage > 0.0) || !std::isfinite(read_voltage))
        throw ConfigError("analog.read_voltage must be positive");
    if (!(gpu_cycles_per_image > 0.0) || !std::isfinite(gpu_cycles_per_image))
        throw ConfigError("baseline.gpu_cycles_per_image must be positive");
    if (per_neuron_power < 0.0 || per_neuron_area < 0.0)
        throw ConfigError("per-neuron power/area must be non-negative");
}

} // namespace sotmlp
