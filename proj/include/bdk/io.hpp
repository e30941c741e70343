#ifndef BDK_IO_HPP
#define BDK_IO_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/vec.hpp"

namespace bdk {

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                             std::uint64_t seed = 0xCBF29CE484222325ULL) {
    std::uint64_t h = seed;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// Little-endian binary buffer with a running checksum over everything written.
class BinaryWriter {
public:
    void write_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    void write_u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        write_bytes(b, 4);
    }

    void write_u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        write_bytes(b, 8);
    }

    void write_i32(std::int32_t v) { write_u32(static_cast<std::uint32_t>(v)); }

    void write_f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32(bits);
    }

    void write_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(bits);
    }

    void write_string(const std::string& s) {
        write_u32(static_cast<std::uint32_t>(s.size()));
        write_bytes(s.data(), s.size());
    }

    std::uint64_t checksum() const {
        return fnv1a64(std::span<const std::uint8_t>(buf_.data(), buf_.size()));
    }

    /// Appends the checksum of all preceding bytes and flushes to disk.
    void save_with_checksum(const std::string& path) {
        const std::uint64_t sum = checksum();
        write_u64(sum);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError("write failed: " + path);
    }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader over a whole file loaded in memory.
class BinaryReader {
public:
    static BinaryReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open for reading: " + path);
        std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
        return BinaryReader(std::move(data));
    }

    explicit BinaryReader(std::vector<std::uint8_t> data) : buf_(std::move(data)) {}

    void read_bytes(void* out, std::size_t n) {
        if (pos_ + n > buf_.size()) throw IoError("truncated file: unexpected end of data");
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }

    std::uint32_t read_u32() {
        std::uint8_t b[4];
        read_bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t read_u64() {
        std::uint8_t b[8];
        read_bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::int32_t read_i32() { return static_cast<std::int32_t>(read_u32()); }

    float read_f32() {
        std::uint32_t bits = read_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double read_f64() {
        std::uint64_t bits = read_u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string read_string() {
        std::uint32_t n = read_u32();
        if (pos_ + n > buf_.size()) throw IoError("truncated file: string runs past end");
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    /// Verifies the trailing u64 checksum covers all bytes before it.
    /// Call before parsing; leaves the cursor at the start.
    void verify_trailing_checksum() {
        if (buf_.size() < 8) throw IoError("truncated file: shorter than checksum");
        const std::size_t body = buf_.size() - 8;
        const std::uint64_t expected =
            fnv1a64(std::span<const std::uint8_t>(buf_.data(), body));
        std::uint64_t stored = 0;
        for (int i = 0; i < 8; ++i)
            stored |= static_cast<std::uint64_t>(buf_[body + i]) << (8 * i);
        if (stored != expected) throw IoError("checksum mismatch: file is corrupted");
    }

    std::size_t remaining() const { return buf_.size() - pos_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

/// Grayscale images in [-1,1] tiled into a portable pixmap (P2/P3).
/// `images` are side*side*channels vectors; channels must be 1 or 3.
inline void write_pixmap_grid(const std::string& path, std::span<const Vec> images,
                              int side, int channels, int columns) {
    require(!images.empty(), "write_pixmap_grid: no images");
    require(channels == 1 || channels == 3, "write_pixmap_grid: channels must be 1 or 3");
    require(columns >= 1, "write_pixmap_grid: columns must be >= 1");
    const int n = static_cast<int>(images.size());
    const int rows = (n + columns - 1) / columns;
    const int W = columns * side;
    const int H = rows * side;

    auto to_byte = [](double v) {
        double c = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
        return static_cast<int>(c * 255.0 + 0.5);
    };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << (channels == 1 ? "P2" : "P3") << "\n" << W << " " << H << "\n255\n";
    for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
            const int img = (py / side) * columns + (px / side);
            if (img >= n) {
                for (int c = 0; c < channels; ++c) out << "0 ";
                continue;
            }
            const int y = py % side, x = px % side;
            for (int c = 0; c < channels; ++c) {
                const std::size_t idx =
                    static_cast<std::size_t>(c) * side * side + static_cast<std::size_t>(y) * side + x;
                out << to_byte(images[img][idx]) << " ";
            }
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace bdk

#endif // BDK_IO_HPP
