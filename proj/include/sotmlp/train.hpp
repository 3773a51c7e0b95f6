#pragma once

#include <cstdint>
#include <vector>

#include "sotmlp/arch.hpp"
#include "sotmlp/data.hpp"
#include "sotmlp/matrix.hpp"
#include "sotmlp/rng.hpp"

namespace sotmlp {

// Layered MLP parameters: weights[k] is out_k x in_k, biases[k] has out_k
// entries. Transfer per layer: y = Wx + b, o = logistic(-y).
struct MlpParams {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::vector<std::size_t> topology() const;
    void validate_shapes() const;
};

// Real-valued teacher; every entry stays inside [-1,1] (clipped after each
// update).
struct TeacherNet : MlpParams {};

// Binary snapshot of the teacher, entries in {-1,+1}.
struct StudentView : MlpParams {};

enum class Binarization : std::uint8_t { Deterministic, Stochastic };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 10;
    std::size_t batch_size = 100;
    Binarization binarization = Binarization::Deterministic;
    double delta_b = 0.0;      // deterministic binarization threshold
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct EpochRecord {
    std::uint32_t epoch = 0;   // 1-based
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;    // mean per-sample loss seen during the epoch
};

struct Metrics {
    std::vector<EpochRecord> epochs;
    Matrix confusion;          // 10x10, rows = true label, cols = prediction
};

// +1 iff w >= delta_b, else -1.
double binarize_deterministic(double w, double delta_b);

// +1 with probability clamp((w+1)/2, 0, 1). w must lie in [-1,1].
double binarize_stochastic(double w, Rng& rng);

// Clamp every weight and bias into [-1,1]. Idempotent.
void clip_teacher(TeacherNet& net);

// Teacher initialization: uniform in [-0.5, 0.5], inside the clip interval.
// Draw order: per layer, weights row-major then biases.
TeacherNet init_teacher(const std::vector<std::size_t>& topology, Rng& rng);

// Binary snapshot under the active scheme.
StudentView snapshot_student(const TeacherNet& net, const TrainConfig& config, Rng& rng);
StudentView snapshot_student_deterministic(const TeacherNet& net, double delta_b);

// Per-layer records from a forward pass.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;  // y per layer
    std::vector<std::vector<double>> act;  // o per layer
};

// Evaluates the network on one input; the final activation vector is the
// prediction (argmax gives the class). Works for teacher and student alike.
std::vector<double> forward(const MlpParams& net, const std::vector<double>& x,
                            ForwardTrace* trace = nullptr);

// Summed per-class binary cross-entropy: -sum t*ln(o) + (1-t)*ln(1-o).
double loss(const std::vector<double>& o, const std::vector<double>& target);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

struct BatchGradients {
    Gradients grads;
    double loss_sum = 0.0;
};

// Gradient of the summed batch loss with respect to the student's binary
// parameters, backpropagated through o = logistic(-y) (so dL/dy = t - o at the
// output). The straight-through estimator applies these to the teacher's real
// parameters unchanged.
BatchGradients compute_gradients(const MlpParams& student, const Matrix& inputs,
                                 const Matrix& targets,
                                 const std::vector<std::uint32_t>& batch);

// w <- w - lr * g, followed by the mandatory clip.
void sgd_step(TeacherNet& net, const Gradients& grads, double learning_rate);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    Matrix confusion;
};

EvalResult evaluate(const MlpParams& net, const Matrix& images,
                    const std::vector<std::uint8_t>& labels);

// One pass over the training split: snapshot -> forward -> backward -> SGD ->
// clip per batch, then post-epoch accuracy on both splits using the
// deterministic snapshot. Deterministic given the rng state.
EpochRecord train_epoch(TeacherNet& net, const TrainConfig& config, const Dataset& data,
                        Rng& rng, std::uint32_t epoch_number);

// Programs the student into the crossbar pipeline layer by layer.
void map_to_crossbar(const StudentView& view, MlpPipeline& pipeline);

} // namespace sotmlp
