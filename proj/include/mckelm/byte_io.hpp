#pragma once

#include "mckelm/error.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace mckelm::io {

// Little-endian encoder for the binary dataset and model formats.
class ByteWriter {
 public:
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }

  // Length-prefixed nested section.
  void put_section(std::uint32_t tag, const ByteWriter& body) {
    put_u32(tag);
    put_u64(body.size());
    buf_.insert(buf_.end(), body.buf_.begin(), body.buf_.end());
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}

  std::size_t remaining() const { return size_ - pos_; }
  bool at_end() const { return pos_ == size_; }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string out(data_ + pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float get_f32() { return std::bit_cast<float>(get_u32()); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }
  std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }

  // Reads a section header and returns a reader over its payload.
  ByteReader get_section(std::uint32_t expected_tag) {
    const std::uint32_t tag = get_u32();
    if (tag != expected_tag) {
      throw Error(ErrorKind::format, context_ + ": unexpected section tag " + std::to_string(tag) +
                                         " (expected " + std::to_string(expected_tag) + ")");
    }
    const std::uint64_t len = get_u64();
    need(len);
    ByteReader sub(data_ + pos_, static_cast<std::size_t>(len), context_);
    pos_ += static_cast<std::size_t>(len);
    return sub;
  }

  // Guards a declared element count against the bytes actually present.
  void require(std::uint64_t count, std::uint64_t width) const {
    if (width != 0 && count > remaining() / width) {
      throw Error(ErrorKind::format, context_ + ": truncated payload (declared " + std::to_string(count) +
                                         " elements, " + std::to_string(remaining()) + " bytes left)");
    }
  }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) throw Error(ErrorKind::format, context_ + ": truncated file");
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::io, "read failed for '" + path.string() + "'");
  return data;
}

// Writes to a sibling temp file then renames, so a failed write never leaves
// a partial artifact at `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + tmp.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::io, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot rename onto '" + path.string() + "'");
  }
}

inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& data) {
  write_file_atomic(path, std::string_view(data.data(), data.size()));
}

}  // namespace mckelm::io
