#include "kmkc/mnist_io.hpp"

#include "kmkc/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <memory>
#include <string>

namespace kmkc {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

struct GzCloser {
    void operator()(gzFile_s* f) const { gzclose(f); }
};

// gzread passes uncompressed files through unchanged, so plain and .gz IDX
// files share this path.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::unique_ptr<gzFile_s, GzCloser> file(gzopen(path.c_str(), "rb"));
    if (!file) {
        throw Error("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes;
    std::array<std::uint8_t, 1 << 16> chunk{};
    for (;;) {
        const int n = gzread(file.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int code = 0;
            throw FormatError("cannot read " + path.string() + ": " + gzerror(file.get(), &code));
        }
        if (n == 0) {
            break;
        }
        bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
    }
    return bytes;
}

void check_header(std::span<const std::uint8_t> bytes, std::uint32_t magic, std::size_t header_size, const char* what) {
    if (bytes.size() < 4) {
        throw TruncatedInput(std::string(what) + ": missing IDX magic");
    }
    const std::uint32_t found = read_be32(bytes, 0);
    if (found != magic) {
        throw FormatError(std::string(what) + ": IDX magic " + std::to_string(found) + ", expected " +
                          std::to_string(magic));
    }
    if (bytes.size() < header_size) {
        throw TruncatedInput(std::string(what) + ": truncated IDX header");
    }
}

}  // namespace

ImageSet ImageSet::head(std::size_t n) const {
    ImageSet out;
    out.count = std::min(n, count);
    out.rows = rows;
    out.cols = cols;
    out.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(out.count * pixels_per_image()));
    return out;
}

LabelSet LabelSet::head(std::size_t n) const {
    LabelSet out;
    out.classes = classes;
    out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(n, labels.size())));
    return out;
}

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
    check_header(bytes, kImageMagic, 16, "image file");
    ImageSet set;
    set.count = read_be32(bytes, 4);
    set.rows = read_be32(bytes, 8);
    set.cols = read_be32(bytes, 12);
    const std::size_t payload = set.count * set.rows * set.cols;
    if (bytes.size() - 16 < payload) {
        throw TruncatedInput("image file: header declares " + std::to_string(payload) + " pixel bytes, found " +
                             std::to_string(bytes.size() - 16));
    }
    if (bytes.size() - 16 > payload) {
        throw FormatError("image file: " + std::to_string(bytes.size() - 16 - payload) + " trailing bytes");
    }
    set.pixels.assign(bytes.begin() + 16, bytes.end());
    return set;
}

LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes, std::optional<std::size_t> classes) {
    check_header(bytes, kLabelMagic, 8, "label file");
    const std::size_t count = read_be32(bytes, 4);
    if (bytes.size() - 8 < count) {
        throw TruncatedInput("label file: header declares " + std::to_string(count) + " labels, found " +
                             std::to_string(bytes.size() - 8));
    }
    if (bytes.size() - 8 > count) {
        throw FormatError("label file: " + std::to_string(bytes.size() - 8 - count) + " trailing bytes");
    }
    LabelSet set;
    set.labels.assign(bytes.begin() + 8, bytes.end());
    const std::uint32_t max_label =
        set.labels.empty() ? 0 : *std::max_element(set.labels.begin(), set.labels.end());
    if (classes) {
        if (!set.labels.empty() && max_label >= *classes) {
            throw InvalidArgument("label file: label " + std::to_string(max_label) + " is out of range for " +
                                  std::to_string(*classes) + " classes");
        }
        set.classes = *classes;
    } else {
        set.classes = set.labels.empty() ? 0 : std::size_t{max_label} + 1;
    }
    return set;
}

ImageSet load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file(path)); }

LabelSet load_idx_labels(const std::filesystem::path& path, std::optional<std::size_t> classes) {
    return parse_idx_labels(read_file(path), classes);
}

std::vector<std::uint8_t> encode_idx_images(const ImageSet& images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels.size());
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.count));
    write_be32(out, static_cast<std::uint32_t>(images.rows));
    write_be32(out, static_cast<std::uint32_t>(images.cols));
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const LabelSet& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.count());
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.count()));
    for (std::uint32_t l : labels.labels) {
        out.push_back(static_cast<std::uint8_t>(l));
    }
    return out;
}

std::vector<double> one_hot(std::size_t label, std::size_t classes) {
    if (label >= classes) {
        throw InvalidArgument("one_hot: label " + std::to_string(label) + " out of range for " +
                              std::to_string(classes) + " classes");
    }
    std::vector<double> v(classes, 0.0);
    v[label] = 1.0;
    return v;
}

Matrix one_hot_matrix(const LabelSet& labels) {
    Matrix y(labels.count(), labels.classes);
    for (std::size_t i = 0; i < labels.count(); ++i) {
        if (labels.labels[i] >= labels.classes) {
            throw InvalidArgument("one_hot_matrix: label out of range");
        }
        y(i, labels.labels[i]) = 1.0;
    }
    return y;
}

LabeledDataset make_labeled_dataset(Matrix samples, LabelSet labels) {
    if (samples.rows() != labels.count()) {
        throw DimensionError("make_labeled_dataset: " + std::to_string(samples.rows()) + " samples, " +
                             std::to_string(labels.count()) + " labels");
    }
    Matrix onehot = one_hot_matrix(labels);
    return {std::move(samples), std::move(labels), std::move(onehot)};
}

}  // namespace kmkc
