#include "sotmlp/device.hpp"

#include <cmath>
#include <numbers>

namespace sotmlp {

void DeviceParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string("device parameter ") + name + " must be strictly positive");
    };
    positive(mtj_length, "mtj_length");
    positive(mtj_width, "mtj_width");
    positive(hm_length, "hm_length");
    positive(hm_width, "hm_width");
    positive(hm_thickness, "hm_thickness");
    positive(ra_product, "ra_product");
    positive(v0, "v0");
    positive(tmr0, "tmr0");
}

double mtj_area(const DeviceParams& params) {
    return params.mtj_length * params.mtj_width * std::numbers::pi / 4.0;
}

double base_resistance(const DeviceParams& params) {
    return params.ra_product / mtj_area(params);
}

double tmr(const DeviceParams& params, double v_bias) {
    const double ratio = v_bias / params.v0;
    return (params.tmr0 / 100.0) / (1.0 + ratio * ratio);
}

double resistance(const DeviceParams& params, MagState state, double v_bias) {
    const double r_mtj = base_resistance(params);
    if (state == MagState::Parallel)
        return r_mtj; // theta = 0 cancels the TMR term exactly
    return r_mtj * (1.0 + tmr(params, v_bias));
}

double resistance(const MtjCell& cell, double v_bias) {
    return resistance(*cell.params, cell.state, v_bias);
}

double resistance_at_angle(const DeviceParams& params, double theta, double v_bias) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw DomainError("resistance_at_angle: theta must lie in [0, pi]");
    const double r_mtj = base_resistance(params);
    const double t = tmr(params, v_bias);
    return 2.0 * r_mtj * (1.0 + t) / (2.0 + t * (1.0 + std::cos(theta)));
}

double conductance(const DeviceParams& params, MagState state, double v_bias) {
    return 1.0 / resistance(params, state, v_bias);
}

double conductance(const MtjCell& cell, double v_bias) {
    return 1.0 / resistance(cell, v_bias);
}

} // namespace sotmlp
