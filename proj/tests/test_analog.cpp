#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "sotmlp/analog.hpp"
#include "sotmlp/rng.hpp"
#include "sotmlp/train.hpp"

using namespace sotmlp;

namespace {

std::shared_ptr<const DeviceParams> device() {
    return std::make_shared<const DeviceParams>();
}

NeuronCircuit make_neuron() {
    NeuronCircuit n;
    n.cell_p = {device(), MagState::Parallel};
    n.cell_ap = {device(), MagState::AntiParallel};
    return n;
}

// Layer with Rng-chosen +-1 weights and biases.
CrossbarLayer random_layer(std::size_t in, std::size_t out, Rng& rng, double v_full = 0.1,
                           bool nonideal = false) {
    CrossbarLayer layer(in, out, device(), v_full, nonideal);
    for (std::size_t r = 0; r < out; ++r) {
        for (std::size_t c = 0; c < in; ++c)
            layer.set_weight(r, c, rng.uniform() < 0.5 ? 1 : -1);
        layer.set_bias_weight(r, rng.uniform() < 0.5 ? 1 : -1);
    }
    return layer;
}

std::vector<double> random_input(std::size_t n, Rng& rng) {
    std::vector<double> x(n);
    for (double& v : x)
        v = rng.uniform();
    return x;
}

double logistic_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

TEST_CASE("neuron circuit invariants") {
    NeuronCircuit n = make_neuron();
    CHECK_NOTHROW(n.validate());

    NeuronCircuit swapped = make_neuron();
    swapped.cell_p.state = MagState::AntiParallel;
    CHECK_THROWS_AS(swapped.validate(), ValidationError);
    swapped = make_neuron();
    swapped.cell_ap.state = MagState::Parallel;
    CHECK_THROWS_AS(swapped.validate(), ValidationError);

    NeuronCircuit bad = make_neuron();
    bad.inverter_midpoint = 0.9;  // above vdd
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = make_neuron();
    bad.inverter_gain = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("divider attenuation") {
    NeuronCircuit n = make_neuron();
    CHECK(divider_factor(n) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(bare_inverter_gain(n) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("neuron transfer curve") {
    NeuronCircuit n = make_neuron();
    CHECK(neuron_transfer(n, n.inverter_midpoint) == 0.5);
    CHECK(neuron_transfer(n, n.inverter_midpoint + 0.8) ==
          doctest::Approx(0.2689414213699951).epsilon(1e-12));
    CHECK(neuron_transfer(n, n.inverter_midpoint + 1.6) ==
          doctest::Approx(0.11920292202211755).epsilon(1e-12));

    double prev = neuron_transfer(n, -2.0);
    for (int i = 1; i <= 200; ++i) {
        const double v = -2.0 + 0.025 * i;
        const double o = neuron_transfer(n, v);
        CHECK(o > 0.0);
        CHECK(o < 1.0);
        CHECK(o < prev);
        prev = o;
    }

    for (double d : {0.01, 0.1, 0.4, 1.0, 3.0}) {
        const double hi = neuron_transfer(n, n.inverter_midpoint + d);
        const double lo = neuron_transfer(n, n.inverter_midpoint - d);
        CHECK(hi + lo == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("divider vtc") {
    NeuronCircuit n = make_neuron();
    const VtcPoint mid = neuron_vtc_divider(n, n.inverter_midpoint);
    CHECK(mid.v_gate == doctest::Approx(n.inverter_midpoint).epsilon(1e-14));
    CHECK(mid.v_out == doctest::Approx(n.vdd / 2.0).epsilon(1e-14));

    // Slope reduction at the midpoint: composite/bare = G_P/(G_P+G_AP).
    const double h = 1e-6;
    const double comp =
        (neuron_vtc_divider(n, n.inverter_midpoint + h).v_out -
         neuron_vtc_divider(n, n.inverter_midpoint - h).v_out) / (2.0 * h);
    const double raw = bare_inverter_gain(n);
    auto bare = [&](double v) { return n.vdd * logistic_ref(-raw * (v - n.inverter_midpoint) / n.vdd); };
    const double bare_slope = (bare(n.inverter_midpoint + h) - bare(n.inverter_midpoint - h)) / (2.0 * h);
    CHECK(comp / bare_slope == doctest::Approx(2.0 / 3.0).epsilon(1e-6));

    double prev = neuron_vtc_divider(n, 0.0).v_out;
    for (int i = 1; i < 100; ++i) {
        const double v = 0.8 * static_cast<double>(i) / 99.0;
        const double out = neuron_vtc_divider(n, v).v_out;
        CHECK(out <= prev);
        prev = out;
    }
}

TEST_CASE("synapse current") {
    const SynapsePair plus{{device(), MagState::Parallel}, {device(), MagState::AntiParallel}};
    const SynapsePair minus{{device(), MagState::AntiParallel}, {device(), MagState::Parallel}};

    CHECK(synapse_current(plus, 1.0, 0.1, false) ==
          doctest::Approx(5.890486225480862e-6).epsilon(1e-12));
    CHECK(synapse_current(plus, 0.0, 0.1, false) == 0.0);
    CHECK(synapse_current(minus, 0.0, 0.1, false) == 0.0);

    // G+/G- swap antisymmetry is exact.
    for (double x : {0.25, 0.5, 1.0})
        CHECK(synapse_current(minus, x, 0.1, false) == -synapse_current(plus, x, 0.1, false));

    CHECK_THROWS_AS(synapse_current(plus, -0.1, 0.1, false), DomainError);
    CHECK_THROWS_AS(synapse_current(plus, 1.1, 0.1, false), DomainError);

    // Bias-dependent TMR shrinks the differential at nonzero input.
    const double ideal = synapse_current(plus, 1.0, 0.4, false);
    const double drooped = synapse_current(plus, 1.0, 0.4, true);
    CHECK(drooped < ideal);
    CHECK(drooped > 0.0);
    // Zero input sees zero bias: the two modes agree exactly.
    CHECK(synapse_current(plus, 0.0, 0.4, true) == synapse_current(plus, 0.0, 0.4, false));
}

TEST_CASE("row output") {
    CrossbarLayer layer(3, 2, device());
    layer.set_weight(0, 0, 1);
    layer.set_weight(0, 1, -1);
    layer.set_weight(0, 2, 1);
    layer.set_bias_weight(0, 1);

    // Brute-force oracle: sum the synapse currents, then scale.
    const std::vector<double> x{0.3, 0.9, 0.5};
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
        sum += synapse_current(layer.synapse(0, c), x[c], layer.read_voltage_full_scale, false);
    sum += synapse_current(layer.bias_synapse(0), 1.0, layer.read_voltage_full_scale, false);
    CHECK(row_output(layer, 0, x) ==
          doctest::Approx(layer.amp.transimpedance_gain * sum).epsilon(1e-12));

    // Bias-only row: calibrated amp maps the unit weight to vdd.
    CHECK(row_output(layer, 0, {0.0, 0.0, 0.0}) == doctest::Approx(0.8).epsilon(1e-12));

    // (+1, -1) at x = (1, 1) cancels exactly, leaving the bias term alone.
    CrossbarLayer pair(2, 1, device());
    pair.set_weight(0, 0, 1);
    pair.set_weight(0, 1, -1);
    pair.set_bias_weight(0, 1);
    CHECK(row_output(pair, 0, {1.0, 1.0}) == row_output(pair, 0, {0.0, 0.0}));

    CHECK_THROWS_AS(row_output(layer, 0, {0.1, 0.2}), DimensionError);
    CHECK_THROWS_AS(row_output(layer, 2, x), DimensionError);
    CHECK_THROWS_AS(row_output(layer, 0, {0.1, 0.2, 1.5}), DomainError);
}

TEST_CASE("antisymmetry under pair flip") {
    Rng rng(7);
    for (bool nonideal : {false, true}) {
        CrossbarLayer layer = random_layer(6, 4, rng, 0.2, nonideal);
        const std::vector<double> x = random_input(6, rng);
        std::vector<double> before(4);
        for (std::size_t r = 0; r < 4; ++r)
            before[r] = row_output(layer, r, x);
        layer.flip_all_pairs();
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(row_output(layer, r, x) == -before[r]);
    }
}

TEST_CASE("calibration contract") {
    CrossbarLayer layer(4, 3, device());
    const double gain1 = layer.amp.transimpedance_gain;
    CHECK(gain1 > 0.0);
    for (const NeuronCircuit& n : layer.neurons)
        CHECK(n.inverter_gain == 1.0);

    calibrate_neuron(layer);
    CHECK(layer.amp.transimpedance_gain == gain1);  // idempotent

    // Doubling the conductances (halving RA) halves the transimpedance.
    auto dev2 = std::make_shared<const DeviceParams>([] {
        DeviceParams d;
        d.ra_product = 5e-12;
        return d;
    }());
    CrossbarLayer layer2(4, 3, dev2);
    CHECK(layer2.amp.transimpedance_gain == doctest::Approx(gain1 / 2.0).epsilon(1e-12));

    // A single +1 synapse at x = 1 must land on logistic argument exactly -1.
    CrossbarLayer unit(1, 1, device());
    unit.set_weight(0, 0, 1);
    unit.set_bias_states(0, MagState::Parallel, MagState::Parallel);  // bias disabled
    const std::vector<double> out = layer_forward(unit, {1.0});
    CHECK(out[0] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("ideal layer forward equals the normalized map") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t in = 1 + rng.below(32);
        const std::size_t out = 1 + rng.below(32);
        CrossbarLayer layer = random_layer(in, out, rng);
        const std::vector<double> x = random_input(in, rng);
        const std::vector<double> got = layer_forward(layer, x);
        REQUIRE(got.size() == out);
        for (std::size_t r = 0; r < out; ++r) {
            double y = 0.0;
            for (std::size_t c = 0; c < in; ++c)
                y += static_cast<double>(layer.synapse(r, c).sign()) * x[c];
            y += static_cast<double>(layer.bias_synapse(r).sign());
            CHECK(got[r] == doctest::Approx(logistic_ref(-y)).epsilon(1e-9));
        }
    }
}

TEST_CASE("ideal layer forward is bitwise equal to the abstract network") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t in = 1 + rng.below(24);
        const std::size_t out = 1 + rng.below(24);
        CrossbarLayer layer(in, out, device());

        StudentView net;
        net.weights.emplace_back(out, in);
        net.biases.emplace_back(out, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                const int w = rng.uniform() < 0.5 ? 1 : -1;
                layer.set_weight(r, c, w);
                net.weights[0](r, c) = w;
            }
            const int b = rng.uniform() < 0.5 ? 1 : -1;
            layer.set_bias_weight(r, b);
            net.biases[0][r] = b;
        }

        const std::vector<double> x = random_input(in, rng);
        const std::vector<double> hw = layer_forward(layer, x);
        const std::vector<double> sw = forward(net, x);
        REQUIRE(hw.size() == sw.size());
        for (std::size_t r = 0; r < out; ++r)
            CHECK(hw[r] == sw[r]);  // bitwise: both paths run the same normalized map
    }
}

TEST_CASE("ideal fast path tracks the physical composition") {
    Rng rng(13);
    CrossbarLayer layer = random_layer(16, 8, rng);
    const std::vector<double> x = random_input(16, rng);
    const std::vector<double> fast = layer_forward(layer, x);
    for (std::size_t r = 0; r < 8; ++r) {
        const NeuronCircuit& n = layer.neurons[r];
        const double physical = neuron_transfer(n, n.inverter_midpoint + row_output(layer, r, x));
        CHECK(fast[r] == doctest::Approx(physical).epsilon(1e-12));
    }
}

TEST_CASE("zero input and degenerate bias give the neutral activation") {
    CrossbarLayer layer(3, 2, device());
    for (std::size_t r = 0; r < 2; ++r)
        layer.set_bias_states(r, MagState::Parallel, MagState::Parallel);
    const std::vector<double> out = layer_forward(layer, {0.0, 0.0, 0.0});
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.5);
}

TEST_CASE("nonideal deviation shrinks with the read voltage") {
    Rng rng(21);
    const std::size_t in = 24, out = 10;

    // Same weight pattern at every voltage.
    std::vector<int> weights(out * in), biases(out);
    for (int& w : weights)
        w = rng.uniform() < 0.5 ? 1 : -1;
    for (int& b : biases)
        b = rng.uniform() < 0.5 ? 1 : -1;
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 20; ++i)
        inputs.push_back(random_input(in, rng));

    auto max_gap = [&](double v_full) {
        CrossbarLayer ideal(in, out, device(), v_full, false);
        CrossbarLayer drooped(in, out, device(), v_full, true);
        for (std::size_t r = 0; r < out; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                ideal.set_weight(r, c, weights[r * in + c]);
                drooped.set_weight(r, c, weights[r * in + c]);
            }
            ideal.set_bias_weight(r, biases[r]);
            drooped.set_bias_weight(r, biases[r]);
        }
        double gap = 0.0;
        for (const std::vector<double>& x : inputs) {
            const std::vector<double> a = layer_forward(ideal, x);
            const std::vector<double> b = layer_forward(drooped, x);
            for (std::size_t r = 0; r < out; ++r)
                gap = std::max(gap, std::abs(a[r] - b[r]));
        }
        return gap;
    };

    const double g40 = max_gap(0.4);
    const double g20 = max_gap(0.2);
    const double g10 = max_gap(0.1);
    const double g05 = max_gap(0.05);
    CHECK(g40 > 0.0);
    CHECK(g40 > g20);
    CHECK(g20 > g10);
    CHECK(g10 > g05);
}

TEST_CASE("layer construction and programming guards") {
    CHECK_THROWS_AS(CrossbarLayer(0, 3, device()), DimensionError);
    CHECK_THROWS_AS(CrossbarLayer(3, 0, device()), DimensionError);
    CHECK_THROWS_AS(CrossbarLayer(3, 3, nullptr), ValidationError);

    CrossbarLayer layer(3, 2, device());
    CHECK_THROWS_AS(layer.set_weight(0, 0, 0), ValidationError);
    CHECK_THROWS_AS(layer.set_weight(0, 0, 2), ValidationError);
    CHECK_THROWS_AS(layer.set_weight(2, 0, 1), DimensionError);
    CHECK_THROWS_AS(layer.set_weight(0, 3, 1), DimensionError);
    CHECK_THROWS_AS(layer.synapse(0, 3), DimensionError);
    CHECK_THROWS_AS(layer.bias_synapse(2), DimensionError);
}
