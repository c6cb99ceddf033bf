#include "kmkc/model_io.hpp"

#include "kmkc/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace kmkc {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'K', 'K', 'C', 'M'};
constexpr std::size_t kHeaderSize = 4 + 4 * 7 + 8 * 2 + 8 * 3;

class Writer {
public:
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(std::span<const double> values) {
        for (double v : values) {
            f64(v);
        }
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }
    [[nodiscard]] const std::vector<std::uint8_t>& buffer() const { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
        }
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> f64s(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = f64();
        }
        return v;
    }
    void skip(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1U << 30));
        crc = crc32(crc, bytes.data() + off, chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const StoredModel& stored) {
    const KernelModel& m = stored.model;
    const std::size_t s = m.support.rows();
    const std::size_t dim = m.support.cols();
    const std::size_t k = m.bias.size();
    if (m.weights.rows() != s || m.weights.cols() != k) {
        throw DimensionError("serialize_model: weights are " + std::to_string(m.weights.rows()) + "x" +
                             std::to_string(m.weights.cols()) + ", expected " + std::to_string(s) + "x" +
                             std::to_string(k));
    }
    Writer w;
    w.bytes(kMagic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(stored.regime.mode));
    w.u32(static_cast<std::uint32_t>(stored.regime.patch_side));
    w.u32(static_cast<std::uint32_t>(stored.image_side));
    w.u32(stored.normalization_version);
    w.u32(static_cast<std::uint32_t>(m.kernel.kind));
    w.u32(m.kernel.degree);
    w.f64(m.kernel.gamma);
    w.f64(m.epsilon);
    w.u64(s);
    w.u64(dim);
    w.u64(k);
    w.f64s(m.support.values());
    w.f64s(m.weights.values());
    w.f64s(m.bias);
    const std::uint32_t crc = crc_of(w.buffer());
    w.u32(crc);
    return w.take();
}

StoredModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size()) {
        throw TruncatedInput("model file: too short for the KKCM magic");
    }
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw FormatError("model file: bad magic (not a KKCM container)");
    }
    if (bytes.size() < kHeaderSize) {
        throw TruncatedInput("model file: truncated header");
    }
    Reader r(bytes);
    r.skip(kMagic.size());
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw FormatError("model file: format version " + std::to_string(version) + ", this build reads version " +
                          std::to_string(kModelFormatVersion));
    }
    StoredModel stored;
    const std::uint32_t mode = r.u32();
    if (mode > static_cast<std::uint32_t>(FeatureMode::patch)) {
        throw FormatError("model file: unknown feature mode tag " + std::to_string(mode));
    }
    stored.regime.mode = static_cast<FeatureMode>(mode);
    stored.regime.patch_side = r.u32();
    stored.image_side = r.u32();
    stored.normalization_version = r.u32();
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(KernelKind::gaussian)) {
        throw FormatError("model file: unknown kernel tag " + std::to_string(kind));
    }
    KernelModel& m = stored.model;
    m.kernel.kind = static_cast<KernelKind>(kind);
    m.kernel.degree = r.u32();
    m.kernel.gamma = r.f64();
    m.epsilon = r.f64();
    const std::uint64_t s = r.u64();
    const std::uint64_t dim = r.u64();
    const std::uint64_t k = r.u64();

    // Reject absurd dimensions before multiplying them.
    const std::uint64_t limit = bytes.size() / 8 + 1;
    if (s > limit || dim > limit || k > limit || (s != 0 && dim > limit / s) || (s != 0 && k > limit / s)) {
        throw TruncatedInput("model file: declared dimensions exceed the file size");
    }
    const std::uint64_t expected = kHeaderSize + 8 * (s * dim + s * k + k) + 4;
    if (bytes.size() < expected) {
        throw TruncatedInput("model file: " + std::to_string(bytes.size()) + " bytes, header declares " +
                             std::to_string(expected));
    }
    if (bytes.size() > expected) {
        throw FormatError("model file: " + std::to_string(bytes.size() - expected) + " trailing bytes");
    }
    const auto body = bytes.first(bytes.size() - 4);
    const std::uint32_t stored_crc = Reader(bytes.subspan(bytes.size() - 4)).u32();
    if (crc_of(body) != stored_crc) {
        throw IntegrityError("model file: CRC32 mismatch");
    }
    m.support = Matrix::from_values(s, dim, r.f64s(s * dim));
    m.weights = Matrix::from_values(s, k, r.f64s(s * k));
    m.bias = r.f64s(k);
    return stored;
}

void save_model(const std::filesystem::path& path, const StoredModel& model) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

StoredModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

StoredModel store_patch_model(const PatchModel& model) {
    StoredModel stored;
    stored.regime = {FeatureMode::patch, model.patch_side};
    stored.image_side = model.image_side;
    stored.model = model.inner;
    return stored;
}

PatchModel as_patch_model(const StoredModel& stored) {
    if (stored.regime.mode != FeatureMode::patch) {
        throw InvalidArgument("model was trained for the " + to_string(stored.regime.mode) +
                              " regime, not patch");
    }
    return {stored.model, stored.regime.patch_side, stored.image_side};
}

}  // namespace kmkc
