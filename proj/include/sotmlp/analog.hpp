#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sotmlp/device.hpp"
#include "sotmlp/matrix.hpp"

namespace sotmlp {

// 2T-2R sigmoidal neuron: two SOT-MRAM cells forming a voltage divider in
// front of a CMOS inverter. The divider cell states are fixed: cell_p in P,
// cell_ap in AP. inverter_gain is the composite (divider + inverter) gain in
// normalized units; the bare CMOS gain is recovered via bare_inverter_gain().
struct NeuronCircuit {
    MtjCell cell_p;
    MtjCell cell_ap;
    double vdd = 0.8;               // V
    double vss = 0.0;               // V
    double inverter_midpoint = 0.4; // V, switching threshold
    double inverter_gain = 1.0;     // dimensionless, set by calibration

    void validate() const;
};

// Gate-node attenuation of the divider, G_P / (G_P + G_AP) at zero bias.
double divider_factor(const NeuronCircuit& n);

// Bare CMOS inverter gain implied by the composite gain and the divider.
double bare_inverter_gain(const NeuronCircuit& n);

// Differential binary synapse: weight +1 = (P, AP), weight -1 = (AP, P).
struct SynapsePair {
    MtjCell plus;
    MtjCell minus;

    // Decoded weight sign, +1 or -1. Both-same states decode from the plus cell.
    int sign() const { return plus.state == MagState::Parallel ? +1 : -1; }
};

struct DiffAmpParams {
    double transimpedance_gain = 0.0; // V/A

    void validate() const;
};

// One crossbar layer: out_nodes rows of in_nodes synapse pairs, a bias column
// driven by constant input 1, a shared differential amplifier per row, and a
// sigmoidal neuron per row. The synapse grid is encapsulated so the zero-bias
// conductance-difference cache stays consistent with the cell states.
class CrossbarLayer {
public:
    CrossbarLayer(std::size_t in_nodes, std::size_t out_nodes,
                  std::shared_ptr<const DeviceParams> device,
                  double read_voltage_full_scale = 0.1,
                  bool nonideal_tmr_bias = false);

    std::size_t in_nodes() const { return in_nodes_; }
    std::size_t out_nodes() const { return out_nodes_; }
    const DeviceParams& device() const { return *device_; }
    std::shared_ptr<const DeviceParams> device_ptr() const { return device_; }

    const SynapsePair& synapse(std::size_t row, std::size_t col) const;
    const SynapsePair& bias_synapse(std::size_t row) const;

    // Program one pair; refreshes the cached conductance difference.
    void set_weight(std::size_t row, std::size_t col, int sign);
    void set_bias_weight(std::size_t row, int sign);
    // Degenerate states (both cells equal) are representable for test rigs
    // even though the programming protocol never produces them.
    void set_synapse_states(std::size_t row, std::size_t col, MagState plus, MagState minus);
    void set_bias_states(std::size_t row, MagState plus, MagState minus);
    // Swap the two cells of every pair (weight negation).
    void flip_all_pairs();

    double cached_delta_g(std::size_t row, std::size_t col) const;
    double cached_bias_delta_g(std::size_t row) const;

    // Pair conductance differences normalized by the zero-bias unit difference
    // G_P - G_AP: exactly +1, -1, or 0 (degenerate pair). With the calibration
    // contract the ideal forward pass is the normalized affine-then-logistic
    // map over these, so evaluating it directly keeps the crossbar bit-exact
    // against the abstract network instead of accumulating voltage-roundtrip
    // rounding that can flip argmax ties.
    const Matrix& ideal_weights() const { return ideal_weight_; }
    const std::vector<double>& ideal_biases() const { return ideal_bias_; }

    double read_voltage_full_scale = 0.1; // V mapped to input value 1.0
    bool nonideal_tmr_bias = false;       // evaluate TMR at the instantaneous read bias
    DiffAmpParams amp;
    std::vector<NeuronCircuit> neurons;

private:
    std::size_t in_nodes_;
    std::size_t out_nodes_;
    std::shared_ptr<const DeviceParams> device_;
    std::vector<SynapsePair> synapses_;   // row-major out x in
    std::vector<SynapsePair> bias_column_;
    std::vector<double> delta_g_;         // zero-bias G+ - G- per pair
    std::vector<double> bias_delta_g_;
    double unit_delta_g_ = 0.0;           // zero-bias G_P - G_AP for this device
    Matrix ideal_weight_;                 // delta_g / unit_delta_g per pair
    std::vector<double> ideal_bias_;

    void refresh_pair_cache(std::size_t row, std::size_t col);
    void refresh_bias_cache(std::size_t row);
};

// Signed differential current x * v_full * (G+ - G-). With nonideal set the
// conductances see the instantaneous terminal bias x*v_full; otherwise 0 V.
// x outside [0,1] is a domain error.
double synapse_current(const SynapsePair& pair, double x, double v_full, bool nonideal);

// Differential amplifier output for one row: transimpedance_gain times the
// summed synapse currents plus the bias pair driven at constant input 1.
double row_output(const CrossbarLayer& layer, std::size_t row, const std::vector<double>& x);

// Neuron activation logistic(-gain * (v_in - midpoint) / vdd), in (0,1).
double neuron_transfer(const NeuronCircuit& n, double v_in);

struct VtcPoint {
    double v_gate; // divider output node, V
    double v_out;  // inverter output, V
};

// Divider + bare-inverter transfer curve for VTC exports. The gate node is the
// conductance-weighted average of v_in and the midpoint reference, which
// attenuates the slope by divider_factor relative to the bare inverter.
VtcPoint neuron_vtc_divider(const NeuronCircuit& n, double v_in);

// Sets the amplifier transimpedance and neuron gains so the analog pipeline
// computes o = logistic(-(Wx + b)) in normalized units: a single +1 synapse
// driven at x = 1 lands on logistic argument exactly -1. Deterministic from
// device parameters; degenerate (non-positive) conductance difference is a
// calibration error.
void calibrate_neuron(CrossbarLayer& layer);

// Full layer evaluation. Inputs in [0,1]. In nonideal mode each row sums the
// bias-dependent synapse currents and the amplifier output rides on the
// inverter midpoint common-mode level into the neuron. In ideal mode the
// calibrated chain is evaluated in its exact normalized form (see
// ideal_weights); the two agree to a few ulps, but only the normalized form
// matches the abstract network bitwise.
std::vector<double> layer_forward(const CrossbarLayer& layer, const std::vector<double>& x);

// Preallocated-output variant used by batch evaluation loops. Performs the
// same input validation.
void layer_forward_into(const CrossbarLayer& layer, const std::vector<double>& x,
                        std::vector<double>& out);

} // namespace sotmlp
