#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reach {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

/// Dense row-major tensor as stored in an RTEN file. Values are held as
/// doubles in memory regardless of the on-disk dtype.
struct Tensor {
  DType dtype = DType::f64;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// RTEN layout: "RTEN1", u8 dtype, u8 ndim, ndim x u32 dims, payload.
std::string encode_rten(const Tensor& t);
Tensor decode_rten(std::string_view bytes);

void write_rten(const Tensor& t, const std::string& path);
Tensor read_rten(const std::string& path);

}  // namespace reach
