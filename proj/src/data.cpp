#include "sotmlp/data.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sotmlp/errors.hpp"

namespace sotmlp {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    // 15+16: zlib window with gzip wrapper detection
    if (inflateInit2(&zs, 15 + 16) != Z_OK)
        throw FormatError("gzip: inflateInit failed");

    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("gzip: corrupt compressed stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw FormatError("gzip: truncated compressed stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

} // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16)
        throw FormatError("IDX images: header truncated (" + std::to_string(bytes.size()) +
                          " bytes, need 16)");
    const std::uint32_t magic = read_be32(bytes.data());
    if (magic != kImagesMagic)
        throw FormatError("IDX images: bad magic (expected 0x00000803)");
    IdxImages img;
    img.count = read_be32(bytes.data() + 4);
    img.rows = read_be32(bytes.data() + 8);
    img.cols = read_be32(bytes.data() + 12);
    const std::uint64_t payload =
        std::uint64_t(img.count) * std::uint64_t(img.rows) * std::uint64_t(img.cols);
    if (bytes.size() != 16 + payload)
        throw FormatError("IDX images: payload length " + std::to_string(bytes.size() - 16) +
                          " does not match header (" + std::to_string(payload) + ")");
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8)
        throw FormatError("IDX labels: header truncated");
    const std::uint32_t magic = read_be32(bytes.data());
    if (magic != kLabelsMagic)
        throw FormatError("IDX labels: bad magic (expected 0x00000801)");
    IdxLabels lab;
    lab.count = read_be32(bytes.data() + 4);
    if (bytes.size() != 8 + std::uint64_t(lab.count))
        throw FormatError("IDX labels: payload length does not match header count");
    lab.labels.assign(bytes.begin() + 8, bytes.end());
    for (std::uint8_t v : lab.labels)
        if (v > 9)
            throw ValidationError("IDX labels: label value " + std::to_string(int(v)) +
                                  " out of range 0-9");
    return lab;
}

std::vector<std::uint8_t> serialize_idx_images(const IdxImages& images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels.size());
    write_be32(out, kImagesMagic);
    write_be32(out, images.count);
    write_be32(out, images.rows);
    write_be32(out, images.cols);
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const IdxLabels& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.labels.size());
    write_be32(out, kLabelsMagic);
    write_be32(out, labels.count);
    out.insert(out.end(), labels.labels.begin(), labels.labels.end());
    return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        return gunzip(bytes);
    return bytes;
}

IdxImages load_idx_images(const std::string& path) {
    return parse_idx_images(read_file_maybe_gzip(path));
}

IdxLabels load_idx_labels(const std::string& path) {
    return parse_idx_labels(read_file_maybe_gzip(path));
}

Matrix normalize(const IdxImages& images) {
    const std::size_t dim = std::size_t(images.rows) * images.cols;
    Matrix m(images.count, dim);
    for (std::size_t i = 0; i < images.pixels.size(); ++i)
        m.data[i] = images.pixels[i] / 255.0;
    return m;
}

Matrix one_hot(const std::vector<std::uint8_t>& labels, std::size_t num_classes) {
    Matrix m(labels.size(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes)
            throw ValidationError("one_hot: label out of range");
        m(i, labels[i]) = 1.0;
    }
    return m;
}

namespace {

std::string find_split_file(const std::string& dir, const std::string& stem) {
    namespace fs = std::filesystem;
    for (const char* suffix : {"", ".gz"}) {
        const std::string candidate = (fs::path(dir) / (stem + suffix)).string();
        if (fs::exists(candidate))
            return candidate;
    }
    throw DataError("missing dataset file " + stem + " (or .gz) under " + dir);
}

} // namespace

Dataset load_mnist(const std::string& dir) {
    const IdxImages train_img = load_idx_images(find_split_file(dir, "train-images-idx3-ubyte"));
    const IdxLabels train_lab = load_idx_labels(find_split_file(dir, "train-labels-idx1-ubyte"));
    const IdxImages test_img = load_idx_images(find_split_file(dir, "t10k-images-idx3-ubyte"));
    const IdxLabels test_lab = load_idx_labels(find_split_file(dir, "t10k-labels-idx1-ubyte"));

    if (train_img.count != train_lab.count)
        throw DataError("train split: image/label counts differ");
    if (test_img.count != test_lab.count)
        throw DataError("test split: image/label counts differ");

    Dataset d;
    d.train_images = normalize(train_img);
    d.train_labels = train_lab.labels;
    d.test_images = normalize(test_img);
    d.test_labels = test_lab.labels;
    return d;
}

std::vector<std::vector<std::uint32_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                     Rng& rng) {
    if (batch_size == 0)
        throw ValidationError("batch_size must be at least 1");
    const std::vector<std::uint32_t> order = rng.permutation(n);
    std::vector<std::vector<std::uint32_t>> batches;
    batches.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw DataError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw DataError("cannot rename '" + tmp.string() + "' into place: " + ec.message());
}

} // namespace sotmlp
