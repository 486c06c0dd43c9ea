#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace xdloc {

// 64-bit FNV-1a.
class Fingerprint64 {
 public:
  void update(std::span<const std::byte> bytes);
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void update_value(const T& value) {
    update(std::as_bytes(std::span<const T>(&value, 1)));
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// Little-endian writer over a file opened in binary mode.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void bytes(std::span<const std::byte> data);
  void magic(std::string_view four_cc);
  void u8(std::uint8_t v) { integer(v); }
  void u16(std::uint16_t v) { integer(v); }
  void u32(std::uint32_t v) { integer(v); }
  void u64(std::uint64_t v) { integer(v); }
  void i32(std::int32_t v) { integer(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { integer(static_cast<std::uint64_t>(v)); }
  void f32(float v) { integer(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { integer(std::bit_cast<std::uint64_t>(v)); }
  void f32_array(std::span<const float> values);

  // Flushes and throws Error(kIo) if any write failed.
  void finish();

 private:
  template <typename U>
  void integer(U v) {
    std::array<std::byte, sizeof(U)> buf;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf[i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
    }
    bytes(buf);
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

// Little-endian reader. Short reads throw Error(kTruncated) naming the byte
// offset at which data ran out.
class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  void bytes(std::span<std::byte> out);
  // Throws Error(kFormat) when the next four bytes differ from `four_cc`.
  void expect_magic(std::string_view four_cc);
  std::uint8_t u8() { return integer<std::uint8_t>(); }
  std::uint16_t u16() { return integer<std::uint16_t>(); }
  std::uint32_t u32() { return integer<std::uint32_t>(); }
  std::uint64_t u64() { return integer<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f32_array(std::span<float> out);

  std::uint64_t offset() const { return offset_; }
  std::uint64_t file_size() const { return size_; }
  const std::filesystem::path& path() const { return path_; }
  // Throws Error(kFormat) if unread bytes remain.
  void expect_end();

 private:
  template <typename U>
  U integer() {
    std::array<std::byte, sizeof(U)> buf;
    bytes(buf);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    }
    return v;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
  std::uint64_t size_ = 0;
};

}  // namespace xdloc
