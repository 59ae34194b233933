#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pivnet/error.hpp"

namespace pivnet {

// Locale-independent shortest round-trip formatting for report files.
std::string format_double(double v);

std::uint64_t fnv1a64(std::span<const std::byte> bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string checksum_hex(std::uint64_t h);

// Little-endian binary artifact writer. x86 is little-endian; the swap path
// covers big-endian hosts.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : out_(path, std::ios::binary), path_(path.string()) {
        if (!out_) throw IoError("cannot write " + path_);
    }

    void magic(const char tag[4]) { out_.write(tag, 4); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { scalar(v); }
    void u64(std::uint64_t v) { scalar(v); }
    void f32(float v) { scalar(v); }
    void f64(double v) { scalar(v); }

    void f32_array(std::span<const float> v) {
        for (float x : v) f32(x);
    }
    void f64_array(std::span<const double> v) {
        for (double x : v) f64(x);
    }
    void u32_array(std::span<const std::uint32_t> v) {
        for (auto x : v) u32(x);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    template <typename T>
    void scalar(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(buf, buf + sizeof(T));
        }
        raw(buf, sizeof(T));
    }
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed: " + path_);
    }

    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string()) {
        if (!in_) throw IoError("cannot open " + path_);
    }

    void expect_magic(const char tag[4]) {
        char buf[4];
        raw(buf, 4);
        if (std::memcmp(buf, tag, 4) != 0) {
            throw IoError(path_ + ": bad magic, expected " + std::string(tag, 4));
        }
    }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() { return scalar<std::uint32_t>(); }
    std::uint64_t u64() { return scalar<std::uint64_t>(); }
    float f32() { return scalar<float>(); }
    double f64() { return scalar<double>(); }

    std::vector<float> f32_array(std::size_t n) {
        std::vector<float> v(n);
        for (auto& x : v) x = f32();
        return v;
    }
    std::vector<double> f64_array(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::vector<std::uint32_t> u32_array(std::size_t n) {
        std::vector<std::uint32_t> v(n);
        for (auto& x : v) x = u32();
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T scalar() {
        char buf[sizeof(T)];
        raw(buf, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(buf, buf + sizeof(T));
        }
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) {
            throw IoError(path_ + ": truncated file");
        }
    }

    std::ifstream in_;
    std::string path_;
};

}  // namespace pivnet
