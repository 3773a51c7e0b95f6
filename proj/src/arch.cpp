#include "sotmlp/arch.hpp"

#include <cmath>
#include <string>

namespace sotmlp {

const char* level_name(Level l) {
    switch (l) {
    case Level::Vdd: return "VDD";
    case Level::Gnd: return "GND";
    case Level::HiZ: return "Hi-Z";
    case Level::Vin: return "VIN";
    }
    return "?";
}

ControlSignals signal_table(ArrayOp op) {
    switch (op) {
    case ArrayOp::TrainPlus:
        return {Level::Vdd, Level::Gnd, Level::Vdd, Level::Gnd, Level::HiZ};
    case ArrayOp::TrainMinus:
        return {Level::Vdd, Level::Gnd, Level::Gnd, Level::Vdd, Level::HiZ};
    case ArrayOp::Inference:
        return {Level::Gnd, Level::Vdd, Level::HiZ, Level::HiZ, Level::Vin};
    }
    throw ValidationError("unknown array operation");
}

void program_layer(CrossbarLayer& layer, const Matrix& weights,
                   const std::vector<double>& biases, CycleCounter& counter) {
    if (weights.rows != layer.out_nodes() || weights.cols != layer.in_nodes())
        throw DimensionError("program_layer: weight matrix is " + std::to_string(weights.rows) +
                             "x" + std::to_string(weights.cols) + ", layer wants " +
                             std::to_string(layer.out_nodes()) + "x" + std::to_string(layer.in_nodes()));
    if (biases.size() != layer.out_nodes())
        throw DimensionError("program_layer: bias length mismatch");
    for (double w : weights.data)
        if (w != 1.0 && w != -1.0)
            throw ValidationError("program_layer: weight entries must be exactly +1 or -1");
    for (double b : biases)
        if (b != 1.0 && b != -1.0)
            throw ValidationError("program_layer: bias entries must be exactly +1 or -1");

    // One WWL activation per row writes every pair in that row (BL/SL are
    // per-column drivers), so the update costs out_nodes cycles.
    for (std::size_t r = 0; r < layer.out_nodes(); ++r) {
        for (std::size_t c = 0; c < layer.in_nodes(); ++c)
            layer.set_weight(r, c, weights(r, c) > 0 ? +1 : -1);
        layer.set_bias_weight(r, biases[r] > 0 ? +1 : -1);
        // Neuron divider cells: BL/SL at VDD/VSS pin SOT-MRAM1 to P, SOT-MRAM2 to AP.
        layer.neurons[r].cell_p.state = MagState::Parallel;
        layer.neurons[r].cell_ap.state = MagState::AntiParallel;
    }
    counter.add_training(layer.out_nodes());
}

Matrix decode_weights(const CrossbarLayer& layer) {
    Matrix w(layer.out_nodes(), layer.in_nodes());
    for (std::size_t r = 0; r < layer.out_nodes(); ++r)
        for (std::size_t c = 0; c < layer.in_nodes(); ++c)
            w(r, c) = layer.synapse(r, c).sign();
    return w;
}

std::vector<double> decode_biases(const CrossbarLayer& layer) {
    std::vector<double> b(layer.out_nodes());
    for (std::size_t r = 0; r < layer.out_nodes(); ++r)
        b[r] = layer.bias_synapse(r).sign();
    return b;
}

void MlpPipeline::validate_chain() const {
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (layers[i].in_nodes() != layers[i - 1].out_nodes())
            throw DimensionError("pipeline layer " + std::to_string(i) + " expects " +
                                 std::to_string(layers[i].in_nodes()) + " inputs but layer " +
                                 std::to_string(i - 1) + " has " +
                                 std::to_string(layers[i - 1].out_nodes()) + " outputs");
}

MlpPipeline build_pipeline(const std::vector<std::size_t>& topology,
                           std::shared_ptr<const DeviceParams> device,
                           double read_voltage_full_scale, bool nonideal_tmr_bias) {
    if (topology.size() < 2)
        throw DimensionError("pipeline topology needs at least an input and an output size");
    MlpPipeline p;
    p.layers.reserve(topology.size() - 1);
    for (std::size_t i = 0; i + 1 < topology.size(); ++i)
        p.layers.emplace_back(topology[i], topology[i + 1], device, read_voltage_full_scale,
                              nonideal_tmr_bias);
    p.validate_chain();
    return p;
}

InferenceResult pipeline_infer(MlpPipeline& p, const std::vector<double>& x) {
    if (p.layers.empty())
        throw DimensionError("pipeline has no layers");
    if (x.size() != p.input_size())
        throw DimensionError("pipeline input length mismatch");

    std::vector<double> a = x;
    std::vector<double> next;
    for (const CrossbarLayer& layer : p.layers) {
        layer_forward_into(layer, a, next);
        std::swap(a, next);
    }
    // The concatenated arrays settle together: one clock regardless of depth.
    p.counter.add_inference(1);
    return {std::move(a), 1};
}

BatchInferenceResult pipeline_infer_batch(MlpPipeline& p, const Matrix& xs) {
    if (p.layers.empty())
        throw DimensionError("pipeline has no layers");
    if (xs.rows > 0 && xs.cols != p.input_size())
        throw DimensionError("pipeline batch input width mismatch");

    BatchInferenceResult res;
    res.outputs = Matrix(xs.rows, p.output_size());
    std::vector<double> a, next;
    for (std::size_t i = 0; i < xs.rows; ++i) {
        a.assign(xs.row(i), xs.row(i) + xs.cols);
        for (const CrossbarLayer& layer : p.layers) {
            layer_forward_into(layer, a, next);
            std::swap(a, next);
        }
        for (std::size_t c = 0; c < a.size(); ++c)
            res.outputs(i, c) = a[c];
    }
    p.counter.add_inference(xs.rows);
    res.cycles_added = xs.rows;
    return res;
}

std::uint64_t gpu_cycle_estimate(std::uint64_t batch, double cycles_per_image) {
    if (!(cycles_per_image >= 0.0))
        throw ValidationError("gpu_cycle_estimate: cycles_per_image must be non-negative");
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(batch) * cycles_per_image));
}

PowerAreaReport power_area_report(const MlpPipeline& p, double per_neuron_power,
                                  double per_neuron_area) {
    PowerAreaReport r;
    r.per_neuron_power = per_neuron_power;
    r.per_neuron_area = per_neuron_area;
    for (const CrossbarLayer& layer : p.layers)
        r.neuron_count += layer.out_nodes();
    r.total_power = static_cast<double>(r.neuron_count) * per_neuron_power;
    r.total_area = static_cast<double>(r.neuron_count) * per_neuron_area;
    return r;
}

} // namespace sotmlp
