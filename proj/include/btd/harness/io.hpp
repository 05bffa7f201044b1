#pragma once

// Binary tensor files ("BTF1"):
//
//   offset 0   4 bytes   magic "BTF1"
//   offset 4   u8        order, always 3
//   offset 5   3 x u32   dims I1, I2, I3, little endian
//   offset 17  f64 x N   values in the DenseTensor3 layout, little endian
//
// N = I1 * I2 * I3 and the file must end right after the last value.

#include "btd/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

namespace btd::harness {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kTensorMagic[4] = {'B', 'T', 'F', '1'};
inline constexpr size_t kTensorHeaderBytes = 17;

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, size_t pos) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

} // namespace detail

inline std::string encode_tensor(const DenseTensor3& t) {
  std::string out(kTensorMagic, 4);
  out.push_back(static_cast<char>(3));
  for (int m = 0; m < 3; ++m) {
    if (t.dim(m) > std::numeric_limits<std::uint32_t>::max())
      throw IoError("encode_tensor: dimension does not fit in 32 bits");
    detail::put_le(out, static_cast<std::uint32_t>(t.dim(m)));
  }
  out.reserve(out.size() + 8 * static_cast<size_t>(t.size()));
  for (Index i = 0; i < t.size(); ++i)
    detail::put_le(out, t.values()[i]);
  return out;
}

inline DenseTensor3 decode_tensor(const std::string& bytes) {
  if (bytes.size() < kTensorHeaderBytes || std::memcmp(bytes.data(), kTensorMagic, 4) != 0)
    throw IoError("tensor file: bad magic");
  if (static_cast<unsigned char>(bytes[4]) != 3)
    throw IoError("tensor file: only order-3 tensors are supported");
  Dims d{};
  for (int m = 0; m < 3; ++m)
    d[m] = detail::get_le<std::uint32_t>(bytes, 5 + 4 * static_cast<size_t>(m));
  const size_t n = static_cast<size_t>(d[0]) * static_cast<size_t>(d[1]) * static_cast<size_t>(d[2]);
  if (n == 0)
    throw IoError("tensor file: zero dimension");
  if (bytes.size() != kTensorHeaderBytes + 8 * n)
    throw IoError("tensor file: payload length " + std::to_string(bytes.size() - kTensorHeaderBytes) +
                  " does not match declared dims " + btd::detail::dims_string(d));
  Vector v(static_cast<Index>(n));
  for (size_t i = 0; i < n; ++i)
    v[static_cast<Index>(i)] = detail::get_le<double>(bytes, kTensorHeaderBytes + 8 * i);
  try {
    return DenseTensor3(d, std::move(v));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("tensor file: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad())
    throw IoError("read failed: " + path);
  return s;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failed: " + path);
}

inline void write_tensor(const std::string& path, const DenseTensor3& t) {
  write_file(path, encode_tensor(t));
}

inline DenseTensor3 read_tensor(const std::string& path) { return decode_tensor(read_file(path)); }

} // namespace btd::harness
