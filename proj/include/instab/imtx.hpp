#ifndef INSTAB_IMTX_HPP
#define INSTAB_IMTX_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace instab::imtx {

// On-disk layout, all little-endian:
//
//   offset  size  field
//   0       4     magic "IMTX"
//   4       2     version (= 1)
//   6       2     dtype (1 = float32, 2 = float64)
//   8       8     rows
//   16      8     cols
//   24      ...   row-major payload, rows * cols elements
inline constexpr char kMagic[4] = {'I', 'M', 'T', 'X'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;

enum class DType : std::uint16_t { float32 = 1, float64 = 2 };

// Reads a matrix, widening float32 payloads to double. Rejects bad magic,
// unknown version or dtype, empty shapes, truncated payloads, trailing bytes
// and non-finite values. Errors are BundleError carrying `path`.
Eigen::MatrixXd read(const std::filesystem::path& path);
Eigen::MatrixXd read(std::istream& in, const std::string& source_name);

void write(const std::filesystem::path& path, const Eigen::MatrixXd& matrix, DType dtype = DType::float64);
void write(std::ostream& out, const Eigen::MatrixXd& matrix, DType dtype = DType::float64);

}  // namespace instab::imtx

#endif  // INSTAB_IMTX_HPP
