#pragma once

#include <memory>

#include "sotmlp/errors.hpp"

namespace sotmlp {

// Geometry and material constants of the SHE-MRAM cell. All values SI;
// config files express RA in ohm*um^2 and convert on load.
struct DeviceParams {
    double mtj_length = 50e-9;      // m
    double mtj_width = 30e-9;       // m
    double hm_length = 100e-9;      // m
    double hm_width = 50e-9;        // m
    double hm_thickness = 3e-9;     // m
    double ra_product = 10e-12;     // ohm*m^2  (10 ohm*um^2)
    double v0 = 0.65;               // V, TMR bias-dependence fitting parameter
    double tmr0 = 100.0;            // dimensionless percentage constant
    double temperature = 300.0;     // K, stored only: the TMR formula carries no T term

    void validate() const;
};

enum class MagState : std::uint8_t { Parallel, AntiParallel };

// One SOT-MRAM cell. Cells are binary: only P/AP is storable; intermediate
// angles exist solely as arguments to resistance_at_angle.
struct MtjCell {
    std::shared_ptr<const DeviceParams> params;
    MagState state = MagState::Parallel;
};

// Elliptical junction area, l*w*pi/4.
double mtj_area(const DeviceParams& params);

// R_MTJ = RA / Area.
double base_resistance(const DeviceParams& params);

// TMR(V_b) = (TMR0/100) / (1 + (V_b/V0)^2). Even in v_bias, peak at zero bias.
double tmr(const DeviceParams& params, double v_bias);

// R(theta) = 2 R_MTJ (1+TMR) / (2 + TMR(1+cos theta)). P state reduces to
// R_MTJ exactly (bias-independent); AP state is R_MTJ(1+TMR(v_bias)).
double resistance(const MtjCell& cell, double v_bias);

// Raw angle form of the same formula, exposed for validation sweeps.
// theta outside [0, pi] is a domain error.
double resistance_at_angle(const DeviceParams& params, double theta, double v_bias);

// G = 1/R.
double conductance(const MtjCell& cell, double v_bias);

// Convenience forms that skip the cell wrapper.
double resistance(const DeviceParams& params, MagState state, double v_bias);
double conductance(const DeviceParams& params, MagState state, double v_bias);

} // namespace sotmlp
