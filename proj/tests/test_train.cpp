#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "sotmlp/train.hpp"

using namespace sotmlp;

namespace {

MlpParams random_net(const std::vector<std::size_t>& topology, Rng& rng) {
    MlpParams net;
    for (std::size_t k = 0; k + 1 < topology.size(); ++k) {
        Matrix w(topology[k + 1], topology[k]);
        for (double& v : w.data)
            v = rng.uniform(-1.0, 1.0);
        std::vector<double> b(topology[k + 1]);
        for (double& v : b)
            v = rng.uniform(-1.0, 1.0);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

double batch_loss(const MlpParams& net, const Matrix& inputs, const Matrix& targets) {
    double acc = 0.0;
    std::vector<double> x(inputs.cols), t(targets.cols);
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        x.assign(inputs.row(i), inputs.row(i) + inputs.cols);
        t.assign(targets.row(i), targets.row(i) + targets.cols);
        acc += loss(forward(net, x), t);
    }
    return acc;
}

Dataset tiny_dataset(Rng& rng) {
    Dataset d;
    d.train_images = Matrix(12, 6);
    for (double& v : d.train_images.data)
        v = rng.uniform();
    d.train_labels.resize(12);
    for (std::size_t i = 0; i < 12; ++i)
        d.train_labels[i] = static_cast<std::uint8_t>(i % 3);
    d.test_images = Matrix(6, 6);
    for (double& v : d.test_images.data)
        v = rng.uniform();
    d.test_labels = {0, 1, 2, 0, 1, 2};
    return d;
}

bool same_params(const MlpParams& a, const MlpParams& b) {
    if (a.weights.size() != b.weights.size())
        return false;
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
        if (a.weights[k].data != b.weights[k].data || a.biases[k] != b.biases[k])
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("deterministic binarization boundary") {
    for (double delta_b : {-0.3, 0.0, 0.4}) {
        CHECK(binarize_deterministic(delta_b, delta_b) == 1.0);  // ties go positive
        CHECK(binarize_deterministic(delta_b + 1e-9, delta_b) == 1.0);
        CHECK(binarize_deterministic(delta_b - 1e-9, delta_b) == -1.0);
    }
    // Already-binary values are fixed points at the default threshold.
    CHECK(binarize_deterministic(1.0, 0.0) == 1.0);
    CHECK(binarize_deterministic(-1.0, 0.0) == -1.0);
}

TEST_CASE("stochastic binarization") {
    Rng rng(99);
    CHECK_THROWS_AS(binarize_stochastic(1.0 + 1e-9, rng), DomainError);
    CHECK_THROWS_AS(binarize_stochastic(-1.5, rng), DomainError);

    // Degenerate endpoints are certainties.
    for (int i = 0; i < 200; ++i) {
        CHECK(binarize_stochastic(1.0, rng) == 1.0);
        CHECK(binarize_stochastic(-1.0, rng) == -1.0);
    }

    // Frequencies track p = (w+1)/2 within 3 sigma of the binomial.
    const int n = 10000;
    for (double w : {-0.8, -0.4, 0.0, 0.4, 0.8}) {
        const double p = (w + 1.0) / 2.0;
        int plus = 0;
        for (int i = 0; i < n; ++i)
            if (binarize_stochastic(w, rng) == 1.0)
                ++plus;
        const double sigma = std::sqrt(n * p * (1.0 - p));
        CHECK(std::abs(plus - n * p) <= 3.0 * sigma);
    }
}

TEST_CASE("teacher clip") {
    TeacherNet net;
    net.weights.emplace_back(1, 3);
    net.weights[0].data = {1.7, -2.5, 0.3};
    net.biases.push_back({-1.0001, 0.9});
    clip_teacher(net);
    CHECK(net.weights[0].data == std::vector<double>{1.0, -1.0, 0.3});
    CHECK(net.biases[0] == std::vector<double>{-1.0, 0.9});
    TeacherNet again = net;
    clip_teacher(again);
    CHECK(same_params(again, net));  // idempotent
}

TEST_CASE("teacher initialization") {
    Rng rng(4);
    const TeacherNet net = init_teacher({5, 4, 3}, rng);
    REQUIRE(net.weights.size() == 2);
    CHECK(net.weights[0].rows == 4);
    CHECK(net.weights[0].cols == 5);
    CHECK(net.weights[1].rows == 3);
    CHECK(net.weights[1].cols == 4);
    CHECK(net.biases[0].size() == 4);
    CHECK(net.biases[1].size() == 3);
    CHECK(net.topology() == std::vector<std::size_t>{5, 4, 3});
    CHECK_NOTHROW(net.validate_shapes());

    for (const Matrix& w : net.weights)
        for (double v : w.data) {
            CHECK(v >= -0.5);
            CHECK(v <= 0.5);
        }

    Rng rng_a(4), rng_b(5);
    CHECK(same_params(init_teacher({5, 4, 3}, rng_a), net));
    CHECK_FALSE(same_params(init_teacher({5, 4, 3}, rng_b), net));

    Rng rng_c(1);
    CHECK_THROWS_AS(init_teacher({5}, rng_c), ValidationError);
}

TEST_CASE("shape validation") {
    MlpParams empty;
    CHECK_THROWS_AS(empty.validate_shapes(), ValidationError);
    CHECK(empty.topology().empty());

    MlpParams bad_bias;
    bad_bias.weights.emplace_back(3, 2);
    bad_bias.biases.push_back({0.0, 0.0});  // needs 3
    CHECK_THROWS_AS(bad_bias.validate_shapes(), ValidationError);

    MlpParams bad_chain;
    bad_chain.weights.emplace_back(3, 2);
    bad_chain.biases.emplace_back(3, 0.0);
    bad_chain.weights.emplace_back(2, 4);  // needs 3 inputs
    bad_chain.biases.emplace_back(2, 0.0);
    CHECK_THROWS_AS(bad_chain.validate_shapes(), ValidationError);
}

TEST_CASE("train config validation") {
    TrainConfig ok;
    CHECK_NOTHROW(ok.validate());
    ok.epochs = 0;  // zero epochs is a valid (empty) run
    CHECK_NOTHROW(ok.validate());

    TrainConfig bad = ok;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = ok;
    bad.delta_b = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("snapshot matches scalar binarization") {
    Rng rng(12);
    TeacherNet net = init_teacher({4, 3, 2}, rng);
    const StudentView view = snapshot_student_deterministic(net, 0.1);
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        for (std::size_t i = 0; i < net.weights[k].data.size(); ++i)
            CHECK(view.weights[k].data[i] == binarize_deterministic(net.weights[k].data[i], 0.1));
        for (std::size_t i = 0; i < net.biases[k].size(); ++i)
            CHECK(view.biases[k][i] == binarize_deterministic(net.biases[k][i], 0.1));
    }

    // The config dispatcher routes to the same deterministic path.
    TrainConfig cfg;
    cfg.delta_b = 0.1;
    Rng rng2(1);
    CHECK(same_params(snapshot_student(net, cfg, rng2), view));

    // Stochastic snapshots stay binary.
    cfg.binarization = Binarization::Stochastic;
    const StudentView sto = snapshot_student(net, cfg, rng2);
    for (const Matrix& w : sto.weights)
        for (double v : w.data)
            CHECK((v == 1.0 || v == -1.0));
}

TEST_CASE("forward pass") {
    MlpParams net;
    net.weights.emplace_back(1, 2);
    net.weights[0](0, 0) = 1.0;
    net.weights[0](0, 1) = -1.0;
    net.biases.push_back({1.0});

    // y = 1*1 - 1*0.5 + 1 = 1.5, o = logistic(-1.5).
    ForwardTrace trace;
    const std::vector<double> o = forward(net, {1.0, 0.5}, &trace);
    REQUIRE(o.size() == 1);
    CHECK(o[0] == doctest::Approx(0.18242552380635635).epsilon(1e-12));
    REQUIRE(trace.pre.size() == 1);
    REQUIRE(trace.act.size() == 1);
    CHECK(trace.pre[0][0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(trace.act[0][0] == o[0]);

    CHECK_THROWS_AS(forward(net, {1.0, 0.5, 0.0}), DimensionError);
    MlpParams none;
    CHECK_THROWS_AS(forward(none, {1.0}), ValidationError);
}

TEST_CASE("loss") {
    CHECK(loss({0.5}, {1.0}) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    const std::vector<double> half(10, 0.5);
    std::vector<double> one_hot_t(10, 0.0);
    one_hot_t[3] = 1.0;
    CHECK(loss(half, one_hot_t) == doctest::Approx(6.931471805599453).epsilon(1e-12));
    CHECK_THROWS_AS(loss({0.5, 0.5}, {1.0}), DimensionError);
    // Saturated outputs stay finite through the clamp.
    CHECK(std::isfinite(loss({1.0, 0.0}, {0.0, 1.0})));
}

TEST_CASE("gradients match finite differences") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        Rng rng(seed);
        MlpParams net = random_net({4, 3, 2}, rng);

        Matrix inputs(3, 4), targets(3, 2);
        for (double& v : inputs.data)
            v = rng.uniform();
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t c = rng.below(2);
            targets(i, c) = 1.0;
        }
        const std::vector<std::uint32_t> batch{0, 1, 2};
        const BatchGradients bg = compute_gradients(net, inputs, targets, batch);
        CHECK(bg.loss_sum == doctest::Approx(batch_loss(net, inputs, targets)).epsilon(1e-12));

        const double h = 1e-4;
        double worst = 0.0;
        for (std::size_t k = 0; k < net.weights.size(); ++k) {
            for (std::size_t i = 0; i < net.weights[k].data.size(); ++i) {
                MlpParams up = net, dn = net;
                up.weights[k].data[i] += h;
                dn.weights[k].data[i] -= h;
                const double numeric =
                    (batch_loss(up, inputs, targets) - batch_loss(dn, inputs, targets)) / (2.0 * h);
                const double analytic = bg.grads.weights[k].data[i];
                worst = std::max(worst, std::abs(numeric - analytic) /
                                            std::max(1.0, std::abs(analytic)));
            }
            for (std::size_t i = 0; i < net.biases[k].size(); ++i) {
                MlpParams up = net, dn = net;
                up.biases[k][i] += h;
                dn.biases[k][i] -= h;
                const double numeric =
                    (batch_loss(up, inputs, targets) - batch_loss(dn, inputs, targets)) / (2.0 * h);
                const double analytic = bg.grads.biases[k][i];
                worst = std::max(worst, std::abs(numeric - analytic) /
                                            std::max(1.0, std::abs(analytic)));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("batch gradients sum rather than average") {
    Rng rng(41);
    MlpParams net = random_net({3, 2}, rng);
    Matrix inputs(1, 3), targets(1, 2);
    for (double& v : inputs.data)
        v = rng.uniform();
    targets(0, 1) = 1.0;

    const BatchGradients single = compute_gradients(net, inputs, targets, {0});
    const BatchGradients doubled = compute_gradients(net, inputs, targets, {0, 0});
    CHECK(doubled.loss_sum == 2.0 * single.loss_sum);
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        for (std::size_t i = 0; i < net.weights[k].data.size(); ++i)
            CHECK(doubled.grads.weights[k].data[i] == 2.0 * single.grads.weights[k].data[i]);
        for (std::size_t i = 0; i < net.biases[k].size(); ++i)
            CHECK(doubled.grads.biases[k][i] == 2.0 * single.grads.biases[k][i]);
    }

    CHECK_THROWS_AS(compute_gradients(net, inputs, targets, {1}), DimensionError);
}

TEST_CASE("sgd step clips into the teacher interval") {
    TeacherNet net;
    net.weights.emplace_back(1, 1);
    net.weights[0](0, 0) = 0.95;
    net.biases.push_back({-0.95});
    Gradients g;
    g.weights.emplace_back(1, 1);
    g.weights[0](0, 0) = -10.0;  // pushes to 1.05 before the clip
    g.biases.push_back({10.0});
    sgd_step(net, g, 0.01);
    CHECK(net.weights[0](0, 0) == 1.0);
    CHECK(net.biases[0][0] == -1.0);

    Gradients wrong;
    wrong.weights.emplace_back(2, 1);
    wrong.biases.push_back({0.0, 0.0});
    CHECK_THROWS_AS(sgd_step(net, wrong, 0.01), DimensionError);
}

TEST_CASE("epoch training is deterministic per seed") {
    Rng data_rng(77);
    const Dataset data = tiny_dataset(data_rng);
    TrainConfig cfg;
    cfg.batch_size = 4;

    Rng rng_a(10), rng_b(10), rng_c(11);
    Rng init_a(2), init_b(2), init_c(2);
    TeacherNet net_a = init_teacher({6, 5, 3}, init_a);
    TeacherNet net_b = init_teacher({6, 5, 3}, init_b);
    TeacherNet net_c = init_teacher({6, 5, 3}, init_c);

    const EpochRecord rec_a = train_epoch(net_a, cfg, data, rng_a, 1);
    const EpochRecord rec_b = train_epoch(net_b, cfg, data, rng_b, 1);
    train_epoch(net_c, cfg, data, rng_c, 1);

    CHECK(rec_a.epoch == 1);
    CHECK(same_params(net_a, net_b));
    CHECK(rec_a.train_accuracy == rec_b.train_accuracy);
    CHECK(rec_a.test_accuracy == rec_b.test_accuracy);
    CHECK(rec_a.mean_loss == rec_b.mean_loss);
    CHECK_FALSE(same_params(net_a, net_c));  // shuffle order differs across seeds

    // Weights stay inside the clip interval after updates.
    for (const Matrix& w : net_a.weights)
        for (double v : w.data) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }

    // Accuracy agrees with a fresh evaluation of the deterministic snapshot.
    const StudentView view = snapshot_student_deterministic(net_a, cfg.delta_b);
    CHECK(rec_a.test_accuracy == evaluate(view, data.test_images, data.test_labels).accuracy);
}

TEST_CASE("evaluation fills the confusion matrix") {
    Rng rng(55);
    MlpParams net = random_net({6, 3}, rng);
    Dataset data = tiny_dataset(rng);
    const EvalResult res = evaluate(net, data.test_images, data.test_labels);
    REQUIRE(res.confusion.rows == 3);
    REQUIRE(res.confusion.cols == 3);
    double total = 0.0, diag = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            total += res.confusion(r, c);
            if (r == c)
                diag += res.confusion(r, c);
        }
    CHECK(total == 6.0);
    CHECK(res.accuracy == doctest::Approx(diag / 6.0).epsilon(1e-12));
    CHECK(res.mean_loss > 0.0);
}

TEST_CASE("student maps onto the crossbar") {
    Rng rng(8);
    TeacherNet net = init_teacher({6, 5, 3}, rng);
    const StudentView view = snapshot_student_deterministic(net, 0.0);

    MlpPipeline p = build_pipeline({6, 5, 3}, std::make_shared<const DeviceParams>());
    map_to_crossbar(view, p);
    CHECK(p.counter.training_cycles() == 8);  // 5 + 3 rows

    for (std::size_t k = 0; k < view.weights.size(); ++k) {
        const Matrix decoded = decode_weights(p.layers[k]);
        CHECK(decoded.data == view.weights[k].data);
        CHECK(decode_biases(p.layers[k]) == view.biases[k]);
    }

    // Programmed crossbar and abstract student agree bitwise on inference.
    std::vector<double> x(6);
    for (double& v : x)
        v = rng.uniform();
    const InferenceResult hw = pipeline_infer(p, x);
    const std::vector<double> sw = forward(view, x);
    REQUIRE(hw.output.size() == sw.size());
    for (std::size_t i = 0; i < sw.size(); ++i)
        CHECK(hw.output[i] == sw[i]);

    MlpPipeline wrong = build_pipeline({6, 4, 3}, std::make_shared<const DeviceParams>());
    CHECK_THROWS_AS(map_to_crossbar(view, wrong), DimensionError);
}
