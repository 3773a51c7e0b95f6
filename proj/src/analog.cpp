#include "sotmlp/analog.hpp"

#include <cmath>
#include <string>

namespace sotmlp {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_input_range(const std::vector<double>& x) {
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("crossbar input entries must lie in [0,1]");
}

} // namespace

void NeuronCircuit::validate() const {
    if (!cell_p.params || !cell_ap.params)
        throw ValidationError("neuron cells must carry device parameters");
    if (cell_p.state != MagState::Parallel)
        throw ValidationError("neuron divider cell 1 must be in P state");
    if (cell_ap.state != MagState::AntiParallel)
        throw ValidationError("neuron divider cell 2 must be in AP state");
    if (!(vss < inverter_midpoint && inverter_midpoint < vdd))
        throw ValidationError("neuron requires vss < inverter_midpoint < vdd");
    if (!(inverter_gain > 0.0))
        throw ValidationError("neuron inverter_gain must be positive");
}

double divider_factor(const NeuronCircuit& n) {
    const double g_p = conductance(n.cell_p, 0.0);
    const double g_ap = conductance(n.cell_ap, 0.0);
    return g_p / (g_p + g_ap);
}

double bare_inverter_gain(const NeuronCircuit& n) {
    return n.inverter_gain / divider_factor(n);
}

void DiffAmpParams::validate() const {
    if (!(transimpedance_gain > 0.0) || !std::isfinite(transimpedance_gain))
        throw ValidationError("amplifier transimpedance gain must be positive and finite");
}

CrossbarLayer::CrossbarLayer(std::size_t in_nodes, std::size_t out_nodes,
                             std::shared_ptr<const DeviceParams> device,
                             double read_voltage_full_scale_, bool nonideal_tmr_bias_)
    : read_voltage_full_scale(read_voltage_full_scale_),
      nonideal_tmr_bias(nonideal_tmr_bias_),
      in_nodes_(in_nodes),
      out_nodes_(out_nodes),
      device_(std::move(device)) {
    if (!device_)
        throw ValidationError("crossbar layer requires device parameters");
    device_->validate();
    if (in_nodes_ == 0 || out_nodes_ == 0)
        throw DimensionError("crossbar layer dimensions must be at least 1x1");

    const SynapsePair plus_pair{{device_, MagState::Parallel}, {device_, MagState::AntiParallel}};
    synapses_.assign(out_nodes_ * in_nodes_, plus_pair);
    bias_column_.assign(out_nodes_, plus_pair);
    delta_g_.assign(out_nodes_ * in_nodes_, 0.0);
    bias_delta_g_.assign(out_nodes_, 0.0);
    unit_delta_g_ = conductance(*device_, MagState::Parallel, 0.0) -
                    conductance(*device_, MagState::AntiParallel, 0.0);
    ideal_weight_ = Matrix(out_nodes_, in_nodes_);
    ideal_bias_.assign(out_nodes_, 0.0);
    for (std::size_t r = 0; r < out_nodes_; ++r) {
        for (std::size_t c = 0; c < in_nodes_; ++c)
            refresh_pair_cache(r, c);
        refresh_bias_cache(r);
    }

    NeuronCircuit neuron;
    neuron.cell_p = {device_, MagState::Parallel};
    neuron.cell_ap = {device_, MagState::AntiParallel};
    neurons.assign(out_nodes_, neuron);

    calibrate_neuron(*this);
}

const SynapsePair& CrossbarLayer::synapse(std::size_t row, std::size_t col) const {
    if (row >= out_nodes_ || col >= in_nodes_)
        throw DimensionError("synapse index out of range");
    return synapses_[row * in_nodes_ + col];
}

const SynapsePair& CrossbarLayer::bias_synapse(std::size_t row) const {
    if (row >= out_nodes_)
        throw DimensionError("bias row index out of range");
    return bias_column_[row];
}

void CrossbarLayer::set_weight(std::size_t row, std::size_t col, int sign) {
    if (sign != 1 && sign != -1)
        throw ValidationError("synapse weight must be +1 or -1, got " + std::to_string(sign));
    set_synapse_states(row, col, sign > 0 ? MagState::Parallel : MagState::AntiParallel,
                       sign > 0 ? MagState::AntiParallel : MagState::Parallel);
}

void CrossbarLayer::set_bias_weight(std::size_t row, int sign) {
    if (sign != 1 && sign != -1)
        throw ValidationError("bias weight must be +1 or -1, got " + std::to_string(sign));
    set_bias_states(row, sign > 0 ? MagState::Parallel : MagState::AntiParallel,
                    sign > 0 ? MagState::AntiParallel : MagState::Parallel);
}

void CrossbarLayer::set_synapse_states(std::size_t row, std::size_t col, MagState plus, MagState minus) {
    if (row >= out_nodes_ || col >= in_nodes_)
        throw DimensionError("synapse index out of range");
    SynapsePair& pair = synapses_[row * in_nodes_ + col];
    pair.plus.state = plus;
    pair.minus.state = minus;
    refresh_pair_cache(row, col);
}

void CrossbarLayer::set_bias_states(std::size_t row, MagState plus, MagState minus) {
    if (row >= out_nodes_)
        throw DimensionError("bias row index out of range");
    SynapsePair& pair = bias_column_[row];
    pair.plus.state = plus;
    pair.minus.state = minus;
    refresh_bias_cache(row);
}

void CrossbarLayer::flip_all_pairs() {
    for (std::size_t r = 0; r < out_nodes_; ++r) {
        for (std::size_t c = 0; c < in_nodes_; ++c) {
            const SynapsePair& p = synapses_[r * in_nodes_ + c];
            set_synapse_states(r, c, p.minus.state, p.plus.state);
        }
        const SynapsePair& b = bias_column_[r];
        set_bias_states(r, b.minus.state, b.plus.state);
    }
}

double CrossbarLayer::cached_delta_g(std::size_t row, std::size_t col) const {
    return delta_g_[row * in_nodes_ + col];
}

double CrossbarLayer::cached_bias_delta_g(std::size_t row) const {
    return bias_delta_g_[row];
}

void CrossbarLayer::refresh_pair_cache(std::size_t row, std::size_t col) {
    const SynapsePair& p = synapses_[row * in_nodes_ + col];
    const double dg = conductance(p.plus, 0.0) - conductance(p.minus, 0.0);
    delta_g_[row * in_nodes_ + col] = dg;
    // Same-magnitude numerator and denominator: the quotient is an exact
    // +1 / -1 / 0.
    ideal_weight_(row, col) = dg / unit_delta_g_;
}

void CrossbarLayer::refresh_bias_cache(std::size_t row) {
    const SynapsePair& p = bias_column_[row];
    const double dg = conductance(p.plus, 0.0) - conductance(p.minus, 0.0);
    bias_delta_g_[row] = dg;
    ideal_bias_[row] = dg / unit_delta_g_;
}

double synapse_current(const SynapsePair& pair, double x, double v_full, bool nonideal) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("synapse input must lie in [0,1]");
    const double v_bias = nonideal ? x * v_full : 0.0;
    const double dg = conductance(pair.plus, v_bias) - conductance(pair.minus, v_bias);
    return x * v_full * dg;
}

namespace {

// Summed differential row current, shared by row_output and layer_forward so
// the two agree bitwise.
double row_current(const CrossbarLayer& layer, std::size_t row, const std::vector<double>& x) {
    const double v_full = layer.read_voltage_full_scale;
    double current = 0.0;
    if (layer.nonideal_tmr_bias) {
        for (std::size_t c = 0; c < layer.in_nodes(); ++c)
            current += synapse_current(layer.synapse(row, c), x[c], v_full, true);
        current += synapse_current(layer.bias_synapse(row), 1.0, v_full, true);
    } else {
        for (std::size_t c = 0; c < layer.in_nodes(); ++c)
            current += x[c] * v_full * layer.cached_delta_g(row, c);
        current += v_full * layer.cached_bias_delta_g(row);
    }
    return current;
}

} // namespace

double row_output(const CrossbarLayer& layer, std::size_t row, const std::vector<double>& x) {
    if (x.size() != layer.in_nodes())
        throw DimensionError("row_output: input length " + std::to_string(x.size()) +
                             " does not match in_nodes " + std::to_string(layer.in_nodes()));
    if (row >= layer.out_nodes())
        throw DimensionError("row_output: row index out of range");
    check_input_range(x);
    return layer.amp.transimpedance_gain * row_current(layer, row, x);
}

double neuron_transfer(const NeuronCircuit& n, double v_in) {
    return logistic(-n.inverter_gain * (v_in - n.inverter_midpoint) / n.vdd);
}

VtcPoint neuron_vtc_divider(const NeuronCircuit& n, double v_in) {
    const double g_p = conductance(n.cell_p, 0.0);
    const double g_ap = conductance(n.cell_ap, 0.0);
    const double v_gate = (v_in * g_p + n.inverter_midpoint * g_ap) / (g_p + g_ap);
    const double raw_gain = bare_inverter_gain(n);
    const double v_out = n.vdd * logistic(-raw_gain * (v_gate - n.inverter_midpoint) / n.vdd);
    return {v_gate, v_out};
}

void calibrate_neuron(CrossbarLayer& layer) {
    const DeviceParams& dev = layer.device();
    const double dg = conductance(dev, MagState::Parallel, 0.0) - conductance(dev, MagState::AntiParallel, 0.0);
    if (!(dg > 0.0))
        throw CalibrationError("conductance difference is not positive; cannot calibrate");
    if (layer.neurons.empty())
        throw CalibrationError("layer has no neurons to calibrate");
    for (NeuronCircuit& n : layer.neurons)
        n.inverter_gain = 1.0;
    const NeuronCircuit& ref = layer.neurons.front();
    // inverter_gain * T * v_full * dG / vdd = 1  =>  unit weight at x=1 maps to
    // logistic argument -1.
    layer.amp.transimpedance_gain =
        ref.vdd / (ref.inverter_gain * layer.read_voltage_full_scale * dg);
    layer.amp.validate();
    for (const NeuronCircuit& n : layer.neurons)
        n.validate();
}

void layer_forward_into(const CrossbarLayer& layer, const std::vector<double>& x,
                        std::vector<double>& out) {
    if (x.size() != layer.in_nodes())
        throw DimensionError("layer_forward: input length mismatch");
    check_input_range(x);

    if (!layer.nonideal_tmr_bias) {
        // Exact normalized form of the calibrated chain: y = Wx + b over the
        // +-1 weights, o = logistic(-y), evaluated in the same operation order
        // as the abstract network so the two match bitwise.
        matvec(layer.ideal_weights(), x, out);
        const std::vector<double>& b = layer.ideal_biases();
        for (std::size_t r = 0; r < out.size(); ++r)
            out[r] += b[r];
        for (double& v : out)
            v = logistic(-v);
        return;
    }

    out.resize(layer.out_nodes());
    const double gain = layer.amp.transimpedance_gain;
    for (std::size_t r = 0; r < layer.out_nodes(); ++r) {
        // The amplifier output rides on the inverter midpoint common-mode level.
        const NeuronCircuit& n = layer.neurons[r];
        out[r] = neuron_transfer(n, n.inverter_midpoint + gain * row_current(layer, r, x));
    }
}

std::vector<double> layer_forward(const CrossbarLayer& layer, const std::vector<double>& x) {
    std::vector<double> out;
    layer_forward_into(layer, x, out);
    return out;
}

} // namespace sotmlp
