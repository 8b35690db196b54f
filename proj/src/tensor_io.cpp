#include "reach/tensor_io.hpp"

#include <limits>

#include "reach/binary_io.hpp"
#include "reach/error.hpp"

namespace reach {

namespace {
constexpr std::string_view kMagic = "RTEN1";
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_rten(const Tensor& t) {
  if (t.dims.size() > 255) throw ParameterError("RTEN supports at most 255 dimensions");
  if (t.values.size() != t.element_count()) {
    throw ParameterError("tensor payload has " + std::to_string(t.values.size()) + " values, dims imply " +
                         std::to_string(t.element_count()));
  }
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u8(static_cast<std::uint8_t>(t.dtype));
  w.u8(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) w.u32(d);
  for (double v : t.values) {
    if (t.dtype == DType::f32) {
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  return w.release();
}

Tensor decode_rten(std::string_view bytes) {
  io::ByteReader r(bytes, "RTEN");
  const auto magic = r.bytes(kMagic.size());
  if (magic.substr(0, 4) != kMagic.substr(0, 4)) r.fail("bad magic", 0);
  if (magic != kMagic) r.fail("unsupported version '" + std::string(magic.substr(4)) + "'", 4);

  Tensor t;
  const auto dtype_at = r.offset();
  const auto dtype = r.u8();
  if (dtype > 1) r.fail("unknown dtype " + std::to_string(dtype), dtype_at);
  t.dtype = static_cast<DType>(dtype);
  const auto ndim = r.u8();
  t.dims.reserve(ndim);
  for (int i = 0; i < ndim; ++i) t.dims.push_back(r.u32());

  const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
  // guard the multiplication before allocating
  long double expect = 1;
  for (auto d : t.dims) expect *= d;
  if (expect * width != static_cast<long double>(r.remaining())) {
    r.fail("payload size " + std::to_string(r.remaining()) + " does not match dims");
  }
  const std::size_t n = t.element_count();
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.values[i] = t.dtype == DType::f32 ? static_cast<double>(r.f32()) : r.f64();
  }
  return t;
}

void write_rten(const Tensor& t, const std::string& path) { io::write_file_atomic(path, encode_rten(t)); }

Tensor read_rten(const std::string& path) { return decode_rten(io::read_file(path)); }

}  // namespace reach
