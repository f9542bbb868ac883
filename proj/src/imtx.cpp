#include "instab/imtx.hpp"

#include "instab/common.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace instab::imtx {
namespace {

template <typename T>
T from_le(const unsigned char* bytes) {
  T value;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&value, bytes, sizeof(T));
  } else {
    unsigned char tmp[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) tmp[i] = bytes[sizeof(T) - 1 - i];
    std::memcpy(&value, tmp, sizeof(T));
  }
  return value;
}

template <typename T>
void to_le(T value, unsigned char* bytes) {
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
}

template <typename T>
void decode_payload(const std::vector<unsigned char>& raw, Eigen::MatrixXd& out, const std::string& source) {
  const auto rows = out.rows();
  const auto cols = out.cols();
  const unsigned char* p = raw.data();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c, p += sizeof(T)) {
      const double v = static_cast<double>(from_le<T>(p));
      if (!std::isfinite(v)) {
        throw BundleError("non-finite value at (" + std::to_string(r) + ", " + std::to_string(c) + ")", {},
                          source);
      }
      out(r, c) = v;
    }
  }
}

}  // namespace

Eigen::MatrixXd read(std::istream& in, const std::string& source) {
  unsigned char header[kHeaderSize];
  if (!in.read(reinterpret_cast<char*>(header), kHeaderSize)) {
    throw BundleError("truncated IMTX header", {}, source);
  }
  if (std::memcmp(header, kMagic, 4) != 0) throw BundleError("bad IMTX magic", {}, source);
  const auto version = from_le<std::uint16_t>(header + 4);
  if (version != kVersion) {
    throw BundleError("unsupported IMTX version " + std::to_string(version), {}, source);
  }
  const auto dtype = from_le<std::uint16_t>(header + 6);
  const auto rows = from_le<std::uint64_t>(header + 8);
  const auto cols = from_le<std::uint64_t>(header + 16);
  if (rows == 0 || cols == 0) throw BundleError("IMTX matrix has an empty dimension", {}, source);

  std::size_t elem = 0;
  if (dtype == static_cast<std::uint16_t>(DType::float32)) {
    elem = 4;
  } else if (dtype == static_cast<std::uint16_t>(DType::float64)) {
    elem = 8;
  } else {
    throw BundleError("unsupported IMTX dtype " + std::to_string(dtype), {}, source);
  }
  constexpr auto kMaxIndex = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max());
  if (rows > kMaxIndex || cols > kMaxIndex || rows > (std::numeric_limits<std::uint64_t>::max() / cols) / elem) {
    throw BundleError("IMTX shape too large", {}, source);
  }

  std::vector<unsigned char> raw(rows * cols * elem);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw BundleError("truncated IMTX payload", {}, source);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw BundleError("trailing bytes after IMTX payload", {}, source);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (elem == 4) {
    decode_payload<float>(raw, out, source);
  } else {
    decode_payload<double>(raw, out, source);
  }
  return out;
}

Eigen::MatrixXd read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError("cannot open matrix file", {}, path.string());
  return read(in, path.string());
}

void write(std::ostream& out, const Eigen::MatrixXd& matrix, DType dtype) {
  unsigned char header[kHeaderSize];
  std::memcpy(header, kMagic, 4);
  to_le<std::uint16_t>(kVersion, header + 4);
  to_le<std::uint16_t>(static_cast<std::uint16_t>(dtype), header + 6);
  to_le<std::uint64_t>(static_cast<std::uint64_t>(matrix.rows()), header + 8);
  to_le<std::uint64_t>(static_cast<std::uint64_t>(matrix.cols()), header + 16);
  out.write(reinterpret_cast<const char*>(header), kHeaderSize);

  const std::size_t elem = dtype == DType::float32 ? 4 : 8;
  std::vector<unsigned char> raw(static_cast<std::size_t>(matrix.size()) * elem);
  unsigned char* p = raw.data();
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c, p += elem) {
      if (dtype == DType::float32) {
        to_le<float>(static_cast<float>(matrix(r, c)), p);
      } else {
        to_le<double>(matrix(r, c), p);
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write(const std::filesystem::path& path, const Eigen::MatrixXd& matrix, DType dtype) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  write(out, matrix, dtype);
  if (!out.flush()) throw Error("write failed: " + path.string());
}

}  // namespace instab::imtx
