#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sotmlp/train.hpp"

namespace sotmlp {

// Trained-state container persisted between `train` and `infer`.
struct Checkpoint {
    std::vector<std::size_t> topology;
    TeacherNet teacher;
    Binarization binarization = Binarization::Deterministic;
    double delta_b = 0.0;
};

// Little-endian binary encoding: magic "SOTMLPCK", u32 version, topology,
// binarization byte, delta_b, then per layer the weight rows and biases as
// f64. Decoding validates sizes exactly and rejects anything out of shape or
// outside the teacher's [-1,1] range with FormatError.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

} // namespace sotmlp
