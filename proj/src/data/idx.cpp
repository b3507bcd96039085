#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "lmd/data/dataset.hpp"

namespace lmd::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex;
    os.width(8);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace

numerics::Shape Dataset::image_shape() const {
    if (images.empty()) throw std::logic_error("dataset: empty");
    return images.front().shape();
}

void Dataset::validate() const {
    if (images.empty()) throw std::invalid_argument("dataset: no images");
    const auto shape = images.front().shape();
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape() != shape) {
            throw std::invalid_argument("dataset: image " + std::to_string(i) + " has shape " +
                                        numerics::to_string(images[i].shape()) + ", expected " +
                                        numerics::to_string(shape));
        }
        for (float v : images[i].data()) {
            if (!(v >= -1.0f && v <= 1.0f)) {
                throw std::invalid_argument("dataset: image " + std::to_string(i) + " has value outside [-1, 1]");
            }
        }
    }
}

Dataset Dataset::take(std::size_t count) const {
    Dataset out = *this;
    if (count < out.images.size()) out.images.resize(count);
    return out;
}

float normalize_byte(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }

IdxFile parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) {
        throw std::runtime_error("idx: file too short for a magic number (" + std::to_string(bytes.size()) +
                                 " bytes)");
    }
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kImageMagic) {
        throw std::runtime_error("idx: magic " + hex32(magic) + " is not an unsigned-byte image file (" +
                                 hex32(kImageMagic) + ")");
    }
    const std::size_t rank = magic & 0xff;
    const std::size_t header = 4 + 4 * rank;
    if (bytes.size() < header) {
        throw std::runtime_error("idx: truncated header, expected " + std::to_string(header) + " bytes, got " +
                                 std::to_string(bytes.size()));
    }
    IdxFile file;
    unsigned __int128 expected = 1;
    for (std::size_t d = 0; d < rank; ++d) {
        const std::uint32_t extent = read_be32(bytes, 4 + 4 * d);
        if (extent == 0) throw std::runtime_error("idx: dimension " + std::to_string(d) + " is zero");
        file.dims.push_back(extent);
        expected *= extent;
    }
    const std::size_t actual = bytes.size() - header;
    if (expected != actual) {
        const auto shown = expected > static_cast<unsigned __int128>(UINT64_MAX)
                               ? std::string("> 2^64")
                               : std::to_string(static_cast<std::uint64_t>(expected));
        throw std::runtime_error("idx: payload holds " + std::to_string(actual) + " bytes, dimensions need " +
                                 shown);
    }
    file.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return file;
}

std::vector<std::uint8_t> serialize_idx(const IdxFile& file) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 * file.dims.size() + file.payload.size());
    append_be32(out, 0x00000800u | static_cast<std::uint32_t>(file.dims.size()));
    for (auto d : file.dims) append_be32(out, d);
    out.insert(out.end(), file.payload.begin(), file.payload.end());
    return out;
}

IdxFile read_idx_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("idx: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_idx(bytes);
}

void write_idx_file(const IdxFile& file, const std::filesystem::path& path) {
    const auto bytes = serialize_idx(file);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("idx: write failed for " + path.string());
}

Dataset idx_to_dataset(const IdxFile& file, const std::string& source) {
    if (file.dims.size() != 3) throw std::runtime_error("idx: expected 3 dimensions");
    const std::size_t count = file.dims[0], rows = file.dims[1], cols = file.dims[2];
    Dataset ds;
    ds.source = source;
    ds.normalization = "x/127.5-1";
    ds.images.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        std::vector<float> values(rows * cols);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = normalize_byte(file.payload[n * rows * cols + i]);
        ds.images.emplace_back(numerics::Shape{1, rows, cols}, std::move(values));
    }
    return ds;
}

Dataset read_idx(const std::filesystem::path& path) {
    return idx_to_dataset(read_idx_file(path), "idx:" + path.string());
}

}  // namespace lmd::data
