#include "sotmlp/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include "sotmlp/data.hpp"
#include "sotmlp/errors.hpp"

namespace sotmlp {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'T', 'M', 'L', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n) const {
        if (left < n)
            throw FormatError("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        left -= 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

double checked_weight(double v) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0)
        throw FormatError("checkpoint weight outside [-1,1]");
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    ck.teacher.validate_shapes();
    if (ck.teacher.topology() != ck.topology)
        throw ValidationError("checkpoint topology does not match teacher shape");
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ck.topology.size()));
    for (std::size_t s : ck.topology)
        put_u64(out, s);
    out.push_back(ck.binarization == Binarization::Stochastic ? 1 : 0);
    put_f64(out, ck.delta_b);
    for (std::size_t k = 0; k < ck.teacher.weights.size(); ++k) {
        for (double v : ck.teacher.weights[k].data)
            put_f64(out, v);
        for (double v : ck.teacher.biases[k])
            put_f64(out, v);
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes.data(), bytes.size()};
    r.need(sizeof(kMagic));
    if (std::memcmp(r.p, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("bad checkpoint magic");
    r.p += sizeof(kMagic);
    r.left -= sizeof(kMagic);

    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    const std::uint32_t topo_len = r.u32();
    if (topo_len < 2 || topo_len > 64)
        throw FormatError("implausible checkpoint topology length");
    Checkpoint ck;
    ck.topology.reserve(topo_len);
    for (std::uint32_t i = 0; i < topo_len; ++i) {
        const std::uint64_t s = r.u64();
        if (s == 0 || s > (1u << 24))
            throw FormatError("implausible checkpoint layer size");
        ck.topology.push_back(static_cast<std::size_t>(s));
    }

    r.need(1);
    const std::uint8_t mode = *r.p;
    ++r.p;
    --r.left;
    if (mode > 1)
        throw FormatError("bad binarization tag");
    ck.binarization = mode ? Binarization::Stochastic : Binarization::Deterministic;
    ck.delta_b = r.f64();
    if (!std::isfinite(ck.delta_b) || ck.delta_b < -1.0 || ck.delta_b > 1.0)
        throw FormatError("checkpoint delta_b outside [-1,1]");

    for (std::size_t k = 0; k + 1 < ck.topology.size(); ++k) {
        Matrix w(ck.topology[k + 1], ck.topology[k]);
        for (double& v : w.data)
            v = checked_weight(r.f64());
        std::vector<double> b(ck.topology[k + 1]);
        for (double& v : b)
            v = checked_weight(r.f64());
        ck.teacher.weights.push_back(std::move(w));
        ck.teacher.biases.push_back(std::move(b));
    }
    if (r.left != 0)
        throw FormatError("trailing bytes after checkpoint payload");
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    const std::vector<std::uint8_t> bytes = encode_checkpoint(ck);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint load_checkpoint(const std::string& path) {
    return decode_checkpoint(read_file_maybe_gzip(path));
}

} // namespace sotmlp
