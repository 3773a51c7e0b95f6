#pragma once

#include <string>
#include <vector>

#include "sotmlp/device.hpp"
#include "sotmlp/train.hpp"

namespace sotmlp {

// Everything a run needs, held in SI units. The config file speaks the
// datasheet's units (nm, ohm um^2, uW, um^2); conversion happens at load and
// serialize time so the two never mix internally.
struct ExperimentConfig {
    std::vector<std::size_t> topology{784, 16, 10};
    DeviceParams device;
    TrainConfig train;
    double read_voltage = 0.1;        // full-scale input, volts
    bool nonideal = false;            // bias-dependent TMR during reads
    std::string data_dir;             // empty -> $SOTMLP_DATA, then ./data/mnist
    std::string out_dir = "out";
    double gpu_cycles_per_image = 1e5;
    double per_neuron_power = 64e-6;  // watts
    double per_neuron_area = 0.02e-12; // m^2

    void validate() const;
};

// Parses flat `key = value` lines; '#' lines are comments, blank lines are
// skipped, unknown keys are errors. Starts from defaults.
ExperimentConfig parse_config_text(const std::string& text);

// Applies one key/value pair (same keys as the file). Used for config lines,
// command-line overrides and sweeps alike.
void apply_config_key(ExperimentConfig& config, const std::string& key, const std::string& value);

// Loads a config file; `raw` receives the file's exact bytes for echoing.
ExperimentConfig load_config_file(const std::string& path, std::string* raw = nullptr);

// Emits every key in file units, parseable back to an identical config.
std::string serialize_config(const ExperimentConfig& config);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

} // namespace sotmlp
