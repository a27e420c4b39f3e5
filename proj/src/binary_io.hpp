#pragma once

// Little-endian byte encoding helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hinembed::bio {

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

inline void put_str(std::string& out, const std::string& s) {
  if (s.size() > 0xffff) throw std::invalid_argument("string too long for format");
  put_u16(out, uint16_t(s.size()));
  out.append(s);
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file for writing: " + path);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  uint16_t u16() { return uint16_t(u(2)); }
  uint32_t u32() { return uint32_t(u(4)); }
  uint64_t u64() { return u(8); }
  float f32() { return std::bit_cast<float>(u32()); }

  std::string bytes(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string str() { return bytes(u16()); }
  size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& path() const { return path_; }

  void expect_end(const char* what) const {
    if (remaining() != 0)
      throw std::runtime_error(std::string("trailing bytes in ") + what + " file: " + path_);
  }

 private:
  uint64_t u(size_t n) {
    need(n);
    uint64_t v = 0;
    for (size_t i = 0; i < n; ++i) v |= uint64_t(uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  void need(size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated file: " + path_);
  }

  const std::string& bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace hinembed::bio
