#pragma once

// Little-endian binary primitives shared by the grid, flow-map and SVD
// containers.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcs/error.hpp"

namespace lcs::binary {

class Writer {
  public:
    void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void f64s(std::span<const double> vs) {
        for (double v : vs) f64(v);
    }

    /// Fixed-width, zero-padded string field.
    void fixed_string(std::string_view s, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i)
            bytes_.push_back(i < s.size() ? static_cast<std::uint8_t>(s[i]) : 0);
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    }

  private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
  public:
    explicit Reader(std::vector<std::uint8_t> bytes, std::string origin = {})
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    static Reader from_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return Reader(std::move(bytes), path.string());
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const std::string& origin() const noexcept { return origin_; }

    /// Consumes and checks a magic tag; throws FormatError on mismatch.
    void expect_magic(std::string_view tag) {
        need(tag.size(), "magic");
        if (std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0)
            throw FormatError(where() + "bad magic, expected \"" + std::string(tag) + "\"");
        pos_ += tag.size();
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::int64_t i64(const char* what) { return static_cast<std::int64_t>(u64(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::vector<double> f64s(std::size_t n, const char* what) {
        need(n * 8, what);
        std::vector<double> out(n);
        for (auto& v : out) v = f64(what);
        return out;
    }

    std::string fixed_string(std::size_t width, const char* what) {
        need(width, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), width);
        pos_ += width;
        s.resize(std::strlen(s.c_str()));
        return s;
    }

    std::string where() const { return origin_.empty() ? std::string() : origin_ + ": "; }

  private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n)
            throw FormatError(where() + "malformed header: truncated while reading " + what);
    }

    std::vector<std::uint8_t> bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

} // namespace lcs::binary
