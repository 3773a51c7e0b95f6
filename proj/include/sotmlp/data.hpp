#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sotmlp/matrix.hpp"
#include "sotmlp/rng.hpp"

namespace sotmlp {

// Parsed IDX image container, pixels row-major per image.
struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

struct IdxLabels {
    std::uint32_t count = 0;
    std::vector<std::uint8_t> labels;
};

// Big-endian IDX parsing. Magic 0x00000803 (images) / 0x00000801 (labels);
// payload length must match the header exactly. Labels above 9 are rejected.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes);

// Exact inverses of the parsers; round-trips are bit-identical.
std::vector<std::uint8_t> serialize_idx_images(const IdxImages& images);
std::vector<std::uint8_t> serialize_idx_labels(const IdxLabels& labels);

// Reads a file, transparently inflating gzip (1f 8b) content.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path);

// Writes to a temp file in the target directory, then renames into place, so
// readers never observe a partially written file.
void write_file_atomic(const std::string& path, const std::string& bytes);

IdxImages load_idx_images(const std::string& path);
IdxLabels load_idx_labels(const std::string& path);

// Pixels scaled by 1/255 into a count x (rows*cols) matrix in [0,1].
Matrix normalize(const IdxImages& images);

// One-hot rows, num_classes wide.
Matrix one_hot(const std::vector<std::uint8_t>& labels, std::size_t num_classes = 10);

struct Dataset {
    Matrix train_images;  // N x 784 in [0,1]
    std::vector<std::uint8_t> train_labels;
    Matrix test_images;
    std::vector<std::uint8_t> test_labels;
};

// Loads the four canonical MNIST files from a directory; accepts .gz twins.
Dataset load_mnist(const std::string& dir);

// Deterministic seeded shuffle split into batches; the final short batch is
// kept. Returned values index into the dataset.
std::vector<std::vector<std::uint32_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                     Rng& rng);

} // namespace sotmlp
