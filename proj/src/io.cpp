#include "irattn/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace irattn {

namespace {

constexpr char kMagic[4] = {'I', 'R', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 0;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string(), 0);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open " + tmp.string() + " for writing");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw Error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    float f32(const char* what) {
        return std::bit_cast<float>(u32(what));
    }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) {
            throw FormatError("truncated while reading " + std::string(what), pos_);
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Tensor read_tensor(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    ByteReader r(bytes);

    for (char expected : kMagic) {
        const std::size_t at = r.offset();
        if (r.u8("magic") != static_cast<std::uint8_t>(expected)) {
            throw FormatError("bad magic, not a tensor container", at);
        }
    }
    {
        const std::size_t at = r.offset();
        const std::uint32_t version = r.u32("version");
        if (version != kVersion) {
            throw FormatError("unsupported container version " + std::to_string(version) +
                                  ", expected " + std::to_string(kVersion),
                              at);
        }
    }
    {
        const std::size_t at = r.offset();
        const std::uint8_t dtype = r.u8("dtype");
        if (dtype != kDtypeFloat32) {
            throw FormatError("unsupported dtype " + std::to_string(dtype) + ", expected 0",
                              at);
        }
    }
    const std::size_t rank_at = r.offset();
    const std::uint8_t rank = r.u8("rank");
    if (rank == 0) {
        throw FormatError("rank must be at least 1", rank_at);
    }

    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
        const std::size_t at = r.offset();
        const std::uint64_t e = r.u64("extent");
        if (e == 0) {
            throw FormatError("extent " + std::to_string(i) + " is zero", at);
        }
        if (e > std::numeric_limits<std::size_t>::max() / count) {
            throw FormatError("extents overflow", at);
        }
        shape.push_back(static_cast<std::size_t>(e));
        count *= static_cast<std::size_t>(e);
    }

    const std::size_t payload_at = r.offset();
    const std::size_t expected = count * 4;
    if (r.remaining() != expected) {
        throw FormatError("payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                              std::to_string(expected),
                          payload_at);
    }
    std::vector<float> values;
    values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const float v = r.f32("payload");
        if (!std::isfinite(v)) {
            throw FormatError("non-finite value at flat index " + std::to_string(i), at);
        }
        values.push_back(v);
    }
    return Tensor(std::move(shape), std::move(values));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    std::vector<std::uint8_t> out;
    out.reserve(10 + t.rank() * 8 + t.size() * 4);
    for (char c : kMagic) {
        out.push_back(static_cast<std::uint8_t>(c));
    }
    put_u32(out, kVersion);
    out.push_back(kDtypeFloat32);
    out.push_back(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t e : t.shape()) {
        put_u64(out, e);
    }
    for (float v : t.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    write_file_atomic(path, out);
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
std::size_t pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                      const char* what) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
        throw FormatError("expected " + std::string(what), pos);
    }
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
        if (value > (1u << 20)) {
            throw FormatError(std::string(what) + " is implausibly large", start);
        }
        ++pos;
    }
    return value;
}

}  // namespace

Bitmap read_mask(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw FormatError("bad magic, not a P5 mask", 0);
    }
    std::size_t pos = 2;
    const std::size_t width = pgm_token(bytes, pos, "width");
    const std::size_t height = pgm_token(bytes, pos, "height");
    const std::size_t maxval_at = pos;
    const std::size_t maxval = pgm_token(bytes, pos, "maxval");
    if (maxval != 255) {
        throw FormatError("maxval must be 255", maxval_at);
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw FormatError("expected whitespace before pixel data", pos);
    }
    ++pos;
    if (width == 0 || height == 0) {
        throw FormatError("mask extents must be positive", 2);
    }
    if (bytes.size() - pos != width * height) {
        throw FormatError("pixel data is " + std::to_string(bytes.size() - pos) +
                              " bytes, expected " + std::to_string(width * height),
                          pos);
    }
    Bitmap mask(height, width);
    for (std::size_t p = 0; p < width * height; ++p) {
        mask.bits[p] = bytes[pos + p] >= 128 ? 1 : 0;
    }
    return mask;
}

void write_mask(const Bitmap& mask, const std::filesystem::path& path) {
    const std::string header = "P5\n" + std::to_string(mask.width) + " " +
                               std::to_string(mask.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (std::uint8_t b : mask.bits) {
        out.push_back(b ? 255 : 0);
    }
    write_file_atomic(path, out);
}

}  // namespace irattn
