#include "sotmlp/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sotmlp/errors.hpp"

namespace sotmlp {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

} // namespace

std::vector<std::size_t> MlpParams::topology() const {
    std::vector<std::size_t> t;
    if (weights.empty())
        return t;
    t.push_back(weights.front().cols);
    for (const Matrix& w : weights)
        t.push_back(w.rows);
    return t;
}

void MlpParams::validate_shapes() const {
    if (weights.empty())
        throw ValidationError("network has no layers");
    if (weights.size() != biases.size())
        throw ValidationError("layer count mismatch between weights and biases");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].rows == 0 || weights[k].cols == 0)
            throw ValidationError("layer " + std::to_string(k) + " has an empty dimension");
        if (biases[k].size() != weights[k].rows)
            throw ValidationError("layer " + std::to_string(k) + " bias length mismatch");
        if (k > 0 && weights[k].cols != weights[k - 1].rows)
            throw ValidationError("layer " + std::to_string(k) + " input width does not chain");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning_rate must be positive and finite");
    if (batch_size == 0)
        throw ValidationError("batch_size must be positive");
    if (!std::isfinite(delta_b) || delta_b < -1.0 || delta_b > 1.0)
        throw ValidationError("delta_b must lie in [-1,1]");
}

double binarize_deterministic(double w, double delta_b) {
    return w >= delta_b ? 1.0 : -1.0;
}

double binarize_stochastic(double w, Rng& rng) {
    if (!(w >= -1.0 && w <= 1.0))
        throw DomainError("stochastic binarization needs w in [-1,1], got " + std::to_string(w));
    const double p = std::clamp((w + 1.0) / 2.0, 0.0, 1.0);
    return rng.uniform() < p ? 1.0 : -1.0;
}

void clip_teacher(TeacherNet& net) {
    for (Matrix& w : net.weights)
        for (double& v : w.data)
            v = std::clamp(v, -1.0, 1.0);
    for (std::vector<double>& b : net.biases)
        for (double& v : b)
            v = std::clamp(v, -1.0, 1.0);
}

TeacherNet init_teacher(const std::vector<std::size_t>& topology, Rng& rng) {
    if (topology.size() < 2)
        throw ValidationError("topology needs at least input and output sizes");
    TeacherNet net;
    for (std::size_t k = 0; k + 1 < topology.size(); ++k) {
        Matrix w(topology[k + 1], topology[k]);
        for (double& v : w.data)
            v = rng.uniform(-0.5, 0.5);
        std::vector<double> b(topology[k + 1]);
        for (double& v : b)
            v = rng.uniform(-0.5, 0.5);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

StudentView snapshot_student_deterministic(const TeacherNet& net, double delta_b) {
    StudentView view;
    view.weights.reserve(net.weights.size());
    view.biases.reserve(net.biases.size());
    for (const Matrix& w : net.weights) {
        Matrix s(w.rows, w.cols);
        for (std::size_t i = 0; i < w.data.size(); ++i)
            s.data[i] = binarize_deterministic(w.data[i], delta_b);
        view.weights.push_back(std::move(s));
    }
    for (const std::vector<double>& b : net.biases) {
        std::vector<double> s(b.size());
        for (std::size_t i = 0; i < b.size(); ++i)
            s[i] = binarize_deterministic(b[i], delta_b);
        view.biases.push_back(std::move(s));
    }
    return view;
}

StudentView snapshot_student(const TeacherNet& net, const TrainConfig& config, Rng& rng) {
    if (config.binarization == Binarization::Deterministic)
        return snapshot_student_deterministic(net, config.delta_b);
    StudentView view;
    view.weights.reserve(net.weights.size());
    view.biases.reserve(net.biases.size());
    for (const Matrix& w : net.weights) {
        Matrix s(w.rows, w.cols);
        for (std::size_t i = 0; i < w.data.size(); ++i)
            s.data[i] = binarize_stochastic(w.data[i], rng);
        view.weights.push_back(std::move(s));
    }
    for (const std::vector<double>& b : net.biases) {
        std::vector<double> s(b.size());
        for (std::size_t i = 0; i < b.size(); ++i)
            s[i] = binarize_stochastic(b[i], rng);
        view.biases.push_back(std::move(s));
    }
    return view;
}

std::vector<double> forward(const MlpParams& net, const std::vector<double>& x,
                            ForwardTrace* trace) {
    if (net.weights.empty())
        throw ValidationError("network has no layers");
    if (trace) {
        trace->pre.assign(net.weights.size(), {});
        trace->act.assign(net.weights.size(), {});
    }
    std::vector<double> cur = x;
    std::vector<double> y;
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        matvec(net.weights[k], cur, y);
        for (std::size_t j = 0; j < y.size(); ++j)
            y[j] += net.biases[k][j];
        cur.resize(y.size());
        for (std::size_t j = 0; j < y.size(); ++j)
            cur[j] = logistic(-y[j]);
        if (trace) {
            trace->pre[k] = y;
            trace->act[k] = cur;
        }
    }
    return cur;
}

double loss(const std::vector<double>& o, const std::vector<double>& target) {
    if (o.size() != target.size())
        throw DimensionError("loss: output and target lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        // Logistic outputs are strictly inside (0,1) mathematically; the clamp
        // only guards the extreme doubles where exp() saturates.
        const double p = std::clamp(o[i], 1e-12, 1.0 - 1e-12);
        acc -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    }
    return acc;
}

BatchGradients compute_gradients(const MlpParams& student, const Matrix& inputs,
                                 const Matrix& targets,
                                 const std::vector<std::uint32_t>& batch) {
    student.validate_shapes();
    if (inputs.rows != targets.rows)
        throw DimensionError("compute_gradients: inputs and targets row counts differ");
    if (inputs.cols != student.weights.front().cols)
        throw DimensionError("compute_gradients: input width does not match first layer");
    if (targets.cols != student.weights.back().rows)
        throw DimensionError("compute_gradients: target width does not match last layer");

    const std::size_t depth = student.weights.size();
    BatchGradients out;
    out.grads.weights.reserve(depth);
    out.grads.biases.reserve(depth);
    for (std::size_t k = 0; k < depth; ++k) {
        out.grads.weights.emplace_back(student.weights[k].rows, student.weights[k].cols);
        out.grads.biases.emplace_back(student.weights[k].rows, 0.0);
    }

    ForwardTrace trace;
    std::vector<double> x(inputs.cols), t(targets.cols);
    std::vector<double> delta, delta_prev;
    for (std::uint32_t idx : batch) {
        if (idx >= inputs.rows)
            throw DimensionError("compute_gradients: batch index out of range");
        x.assign(inputs.row(idx), inputs.row(idx) + inputs.cols);
        t.assign(targets.row(idx), targets.row(idx) + targets.cols);
        const std::vector<double> o = forward(student, x, &trace);
        out.loss_sum += loss(o, t);

        // Output layer: with o = logistic(-y) the per-class cross-entropy
        // gives dL/dy = t - o directly.
        delta.resize(o.size());
        for (std::size_t j = 0; j < o.size(); ++j)
            delta[j] = t[j] - o[j];

        for (std::size_t k = depth; k-- > 0;) {
            const std::vector<double>& below = k == 0 ? x : trace.act[k - 1];
            add_outer(out.grads.weights[k], delta, below);
            for (std::size_t j = 0; j < delta.size(); ++j)
                out.grads.biases[k][j] += delta[j];
            if (k == 0)
                break;
            matvec_transposed(student.weights[k], delta, delta_prev);
            const std::vector<double>& act = trace.act[k - 1];
            delta.resize(act.size());
            for (std::size_t j = 0; j < act.size(); ++j)
                delta[j] = -act[j] * (1.0 - act[j]) * delta_prev[j];
        }
    }
    return out;
}

void sgd_step(TeacherNet& net, const Gradients& grads, double learning_rate) {
    if (grads.weights.size() != net.weights.size())
        throw DimensionError("sgd_step: gradient layer count mismatch");
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        if (!net.weights[k].same_shape(grads.weights[k]) ||
            net.biases[k].size() != grads.biases[k].size())
            throw DimensionError("sgd_step: gradient shape mismatch at layer " + std::to_string(k));
        for (std::size_t i = 0; i < net.weights[k].data.size(); ++i)
            net.weights[k].data[i] -= learning_rate * grads.weights[k].data[i];
        for (std::size_t i = 0; i < net.biases[k].size(); ++i)
            net.biases[k][i] -= learning_rate * grads.biases[k][i];
    }
    clip_teacher(net);
}

EvalResult evaluate(const MlpParams& net, const Matrix& images,
                    const std::vector<std::uint8_t>& labels) {
    if (images.rows != labels.size())
        throw DimensionError("evaluate: image and label counts differ");
    const std::size_t classes = net.weights.back().rows;
    EvalResult res;
    res.confusion = Matrix(classes, classes);
    std::vector<double> x(images.cols), t(classes);
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < images.rows; ++i) {
        x.assign(images.row(i), images.row(i) + images.cols);
        const std::vector<double> o = forward(net, x);
        const std::size_t pred = argmax(o);
        const std::size_t truth = labels[i];
        if (truth >= classes)
            throw ValidationError("evaluate: label exceeds class count");
        res.confusion(truth, pred) += 1.0;
        if (pred == truth)
            ++correct;
        std::fill(t.begin(), t.end(), 0.0);
        t[truth] = 1.0;
        loss_sum += loss(o, t);
    }
    res.accuracy = images.rows ? static_cast<double>(correct) / static_cast<double>(images.rows) : 0.0;
    res.mean_loss = images.rows ? loss_sum / static_cast<double>(images.rows) : 0.0;
    return res;
}

EpochRecord train_epoch(TeacherNet& net, const TrainConfig& config, const Dataset& data,
                        Rng& rng, std::uint32_t epoch_number) {
    config.validate();
    net.validate_shapes();
    const std::size_t n = data.train_images.rows;
    if (n == 0)
        throw DataError("train_epoch: empty training split");

    const Matrix targets = one_hot(data.train_labels, net.weights.back().rows);
    const auto batches = make_batches(n, config.batch_size, rng);
    double loss_sum = 0.0;
    for (const std::vector<std::uint32_t>& batch : batches) {
        const StudentView student = snapshot_student(net, config, rng);
        BatchGradients bg = compute_gradients(student, data.train_images, targets, batch);
        loss_sum += bg.loss_sum;
        sgd_step(net, bg.grads, config.learning_rate);
    }

    // Accuracy is always reported for the deterministic snapshot: that is the
    // configuration the crossbar would actually be programmed with.
    const StudentView student = snapshot_student_deterministic(net, config.delta_b);
    EpochRecord rec;
    rec.epoch = epoch_number;
    rec.mean_loss = loss_sum / static_cast<double>(n);
    rec.train_accuracy = evaluate(student, data.train_images, data.train_labels).accuracy;
    rec.test_accuracy = evaluate(student, data.test_images, data.test_labels).accuracy;
    return rec;
}

void map_to_crossbar(const StudentView& view, MlpPipeline& pipeline) {
    view.validate_shapes();
    if (view.weights.size() != pipeline.layers.size())
        throw DimensionError("map_to_crossbar: layer count mismatch");
    for (std::size_t k = 0; k < view.weights.size(); ++k)
        program_layer(pipeline.layers[k], view.weights[k], view.biases[k], pipeline.counter);
}

} // namespace sotmlp
