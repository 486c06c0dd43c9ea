#include "xdloc/binary_io.h"

#include <cstring>
#include <vector>

#include "xdloc/error.h"

namespace xdloc {

void Fingerprint64::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= 0x100000001b3ull;
  }
}

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
}

void BinaryWriter::bytes(std::span<const std::byte> data) {
  out_.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size()));
}

void BinaryWriter::magic(std::string_view four_cc) {
  bytes(std::as_bytes(std::span<const char>(four_cc.data(), 4)));
}

void BinaryWriter::f32_array(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    bytes(std::as_bytes(values));
  } else {
    for (float v : values) f32(v);
  }
}

void BinaryWriter::finish() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIo, "write to '" + path_.string() + "' failed");
  out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  }
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat '" + path.string() + "'");
}

void BinaryReader::bytes(std::span<std::byte> out) {
  if (offset_ + out.size() > size_) {
    throw Error(ErrorCode::kTruncated,
                path_.string() + ": unexpected end of file at byte offset " +
                    std::to_string(size_) + " (needed " +
                    std::to_string(offset_ + out.size()) + ")");
  }
  in_.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (!in_) {
    throw Error(ErrorCode::kIo, path_.string() + ": read failed at byte offset " +
                                    std::to_string(offset_));
  }
  offset_ += out.size();
}

void BinaryReader::expect_magic(std::string_view four_cc) {
  std::array<std::byte, 4> buf;
  bytes(buf);
  if (std::memcmp(buf.data(), four_cc.data(), 4) != 0) {
    throw Error(ErrorCode::kFormat, path_.string() + ": bad magic, expected '" +
                                        std::string(four_cc) + "'");
  }
}

void BinaryReader::f32_array(std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    bytes(std::as_writable_bytes(out));
  } else {
    for (float& v : out) v = f32();
  }
}

void BinaryReader::expect_end() {
  if (offset_ != size_) {
    throw Error(ErrorCode::kFormat,
                path_.string() + ": " + std::to_string(size_ - offset_) +
                    " trailing bytes after offset " + std::to_string(offset_));
  }
}

}  // namespace xdloc
