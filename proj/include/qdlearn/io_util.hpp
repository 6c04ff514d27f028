#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdlearn {

static_assert(std::endian::native == std::endian::little,
              "binary file formats are little-endian; big-endian hosts are unsupported");

// FNV-1a 64-bit. Used for file trailers and config digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// Accumulating binary writer. Everything goes through the byte buffer so a
// checksum over the full payload can be appended before flushing to disk.
class BinaryWriter {
public:
    template <typename T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <typename T>
    void put_array(const T* p, std::size_t n) {
        static_assert(std::is_trivially_copyable_v<T>);
        put_bytes(p, n * sizeof(T));
    }
    std::uint64_t checksum() const { return fnv1a64(buf_.data(), buf_.size()); }
    // Appends the FNV-1a trailer and writes the buffer out.
    void save(const std::string& path) {
        const std::uint64_t sum = checksum();
        put(sum);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out) throw std::runtime_error("write failed: " + path);
    }
    const std::vector<unsigned char>& bytes() const { return buf_; }

private:
    std::vector<unsigned char> buf_;
};

// Reader over a fully loaded file. verify_trailer() checks the FNV-1a trailer
// and restricts the readable range to the payload.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in) throw std::runtime_error("cannot open: " + path);
        const auto size = in.tellg();
        in.seekg(0);
        buf_.resize(static_cast<std::size_t>(size));
        in.read(reinterpret_cast<char*>(buf_.data()), size);
        if (!in) throw std::runtime_error("read failed: " + path);
        end_ = buf_.size();
    }
    void verify_trailer() {
        if (buf_.size() < 8) throw std::runtime_error("truncated file: " + path_);
        std::uint64_t stored;
        std::memcpy(&stored, buf_.data() + buf_.size() - 8, 8);
        if (stored != fnv1a64(buf_.data(), buf_.size() - 8))
            throw std::runtime_error("checksum mismatch (truncated or corrupt): " + path_);
        end_ = buf_.size() - 8;
    }
    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        take(&v, sizeof(T));
        return v;
    }
    template <typename T>
    void get_array(T* p, std::size_t n) {
        static_assert(std::is_trivially_copyable_v<T>);
        take(p, n * sizeof(T));
    }
    std::size_t remaining() const { return end_ - pos_; }
    const std::string& path() const { return path_; }

private:
    void take(void* p, std::size_t n) {
        if (pos_ + n > end_) throw std::runtime_error("truncated file: " + path_);
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::string path_;
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
};

}  // namespace qdlearn
