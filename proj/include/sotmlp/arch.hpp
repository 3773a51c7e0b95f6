#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "sotmlp/analog.hpp"
#include "sotmlp/matrix.hpp"

namespace sotmlp {

enum class Level : std::uint8_t { Vdd, Gnd, HiZ, Vin };

const char* level_name(Level l);

// One row of the signaling table: WWL, RWL, BL, SL, IN.
struct ControlSignals {
    Level wwl;
    Level rwl;
    Level bl;
    Level sl;
    Level in;

    bool operator==(const ControlSignals&) const = default;
};

enum class ArrayOp : std::uint8_t { TrainPlus, TrainMinus, Inference };

// Signal levels for each array operation. Total: every op maps to a distinct,
// fully specified tuple.
ControlSignals signal_table(ArrayOp op);

// Protocol cycle counts. Increments are atomic so concurrent batch inference
// stays correct; reads never modify.
class CycleCounter {
public:
    CycleCounter() = default;
    CycleCounter(const CycleCounter& o)
        : training_(o.training_.load()), inference_(o.inference_.load()) {}
    CycleCounter& operator=(const CycleCounter& o) {
        training_.store(o.training_.load());
        inference_.store(o.inference_.load());
        return *this;
    }

    void add_training(std::uint64_t n) { training_.fetch_add(n, std::memory_order_relaxed); }
    void add_inference(std::uint64_t n) { inference_.fetch_add(n, std::memory_order_relaxed); }

    std::uint64_t training_cycles() const { return training_.load(std::memory_order_relaxed); }
    std::uint64_t inference_cycles() const { return inference_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> training_{0};
    std::atomic<std::uint64_t> inference_{0};
};

// Writes one layer's binary weights and biases into the synapse grid.
// Row r of the weight matrix lands in crossbar row r; per-row write word line
// activation makes the whole update cost out_nodes training cycles. Neuron
// divider cells are (re)set to their required (P, AP) configuration.
// Entries must be exactly +1 or -1.
void program_layer(CrossbarLayer& layer, const Matrix& weights,
                   const std::vector<double>& biases, CycleCounter& counter);

// Reads the programmed weight matrix back out of the cell states.
Matrix decode_weights(const CrossbarLayer& layer);
std::vector<double> decode_biases(const CrossbarLayer& layer);

// Chain of crossbar layers; adjacent dimensions must agree.
struct MlpPipeline {
    std::vector<CrossbarLayer> layers;
    CycleCounter counter;

    void validate_chain() const;
    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in_nodes(); }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out_nodes(); }
};

// Convenience builder: topology {784, 16, 10} makes two layers.
MlpPipeline build_pipeline(const std::vector<std::size_t>& topology,
                           std::shared_ptr<const DeviceParams> device,
                           double read_voltage_full_scale = 0.1,
                           bool nonideal_tmr_bias = false);

struct InferenceResult {
    std::vector<double> output;
    std::uint64_t cycles_added = 0;
};

// End-to-end inference through every layer. The concatenated array evaluates
// in a single clock cycle regardless of depth.
InferenceResult pipeline_infer(MlpPipeline& p, const std::vector<double>& x);

// Batch of single-cycle inferences: rows of xs are inputs; charges one cycle
// per row (zero for an empty batch).
struct BatchInferenceResult {
    Matrix outputs;
    std::uint64_t cycles_added = 0;
};
BatchInferenceResult pipeline_infer_batch(MlpPipeline& p, const Matrix& xs);

// GPU comparison baseline: cycles_per_image defaults to the 1e5 figure.
std::uint64_t gpu_cycle_estimate(std::uint64_t batch, double cycles_per_image = 1e5);

struct PowerAreaReport {
    std::uint64_t neuron_count = 0;
    double per_neuron_power = 64e-6;   // W
    double per_neuron_area = 0.02e-12; // m^2
    double total_power = 0.0;          // W
    double total_area = 0.0;           // m^2
};

// Bookkeeping: neuron count times per-unit constants. The per-unit values come
// from transistor-level simulation and layout and are carried as constants.
PowerAreaReport power_area_report(const MlpPipeline& p, double per_neuron_power = 64e-6,
                                  double per_neuron_area = 0.02e-12);

} // namespace sotmlp
