#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reach/error.hpp"
#include "reach/geodesy.hpp"
#include "reach/markov.hpp"
#include "reach/raster.hpp"
#include "reach/summary.hpp"
#include "reach/tensor_io.hpp"
#include "reach/trajectory.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace reach;

namespace {

py::array_t<double> to_numpy(const std::vector<double>& values, const std::vector<py::ssize_t>& shape) {
  py::array_t<double> out(shape);
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

py::array_t<double> raster_array(const RasterWindow& rw) {
  return to_numpy(rw.data, {static_cast<py::ssize_t>(rw.h), static_cast<py::ssize_t>(rw.w),
                            static_cast<py::ssize_t>(rw.c)});
}

SummaryParams make_params(std::uint32_t zoom, std::uint32_t delta_r, const std::string& weighting,
                          std::optional<double> sigma_d, std::optional<double> sigma_t) {
  SummaryParams p;
  p.q = zoom;
  p.delta_r = delta_r;
  if (weighting == "gaussian") {
    if (!sigma_d || !sigma_t) throw ParameterError("gaussian weighting requires sigma_d and sigma_t");
    p.weighting = Weighting::gaussian;
    p.sigma_d = *sigma_d;
    p.sigma_t = *sigma_t;
  } else if (weighting != "unit") {
    throw ParameterError("weighting must be 'unit' or 'gaussian'");
  }
  p.validate();
  return p;
}

TrajectorySet load(const std::string& path, const std::string& format, std::uint32_t zoom) {
  ParseOptions o;
  o.zoom = zoom;
  if (format == "tdrive") {
    o.format = CsvFormat::tdrive;
    return preprocess_tdrive(parse_csv_path(path, o).set);
  }
  if (format != "generic") throw ParameterError("format must be 'generic' or 'tdrive'");
  return parse_csv_path(path, o).set;
}

std::string status_name(CkeStatus s) {
  switch (s) {
    case CkeStatus::pass: return "pass";
    case CkeStatus::fail: return "fail";
    default: return "not-applicable";
  }
}

}  // namespace

PYBIND11_MODULE(_reach, m) {
  m.doc() = "Reachability summaries and location-aware rasters";

  auto base = py::register_exception<Error>(m, "ReachError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<InvalidCoordinate>(m, "InvalidCoordinate", PyExc_ValueError);
  py::register_exception<NotFound>(m, "NotFound", PyExc_KeyError);

  m.def(
      "latlon_to_tile",
      [](double lat, double lon, std::uint32_t q) {
        const auto t = latlon_to_tile(LatLon::make(lat, lon), q);
        return py::make_tuple(t.x, t.y);
      },
      "lat"_a, "lon"_a, "zoom"_a = 24);
  m.def(
      "tile_centroid",
      [](std::uint32_t x, std::uint32_t y, std::uint32_t q) {
        const auto c = tile_centroid(TileCoord{q, x, y});
        return py::make_tuple(c.lat, c.lon);
      },
      "x"_a, "y"_a, "zoom"_a = 24);
  m.def(
      "haversine_m",
      [](double lat1, double lon1, double lat2, double lon2) {
        return haversine_m(LatLon::make(lat1, lon1), LatLon::make(lat2, lon2));
      },
      "lat1"_a, "lon1"_a, "lat2"_a, "lon2"_a);
  m.def(
      "row_major_index",
      [](std::pair<std::uint32_t, std::uint32_t> s, std::pair<std::uint32_t, std::uint32_t> s2,
         std::uint32_t delta_r) {
        return row_major_index(TileCoord{24, s.first, s.second}, TileCoord{24, s2.first, s2.second}, delta_r);
      },
      "s"_a, "s2"_a, "delta_r"_a);
  m.def(
      "inverse_index",
      [](std::uint32_t idx, std::uint32_t delta_r) {
        const auto o = inverse_index(idx, delta_r);
        return py::make_tuple(o.dx, o.dy);
      },
      "idx"_a, "delta_r"_a);
  m.def("gaussian_weight", &gaussian_weight, "dd"_a, "dt"_a, "sigma_d"_a, "sigma_t"_a);

  py::class_<ReachabilityMap>(m, "ReachabilityMap")
      .def_property_readonly("delta_r", [](const ReachabilityMap& r) { return r.params().delta_r; })
      .def_property_readonly("zoom", [](const ReachabilityMap& r) { return r.params().q; })
      .def_property_readonly("side", [](const ReachabilityMap& r) { return r.params().side(); })
      .def("__len__", &ReachabilityMap::size)
      .def("nodes",
           [](const ReachabilityMap& r) {
             std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
             for (const auto& n : r.nodes()) out.emplace_back(n.node.x, n.node.y);
             return out;
           })
      .def("total_mass", &ReachabilityMap::total_absorption)
      .def(
          "dense",
          [](const ReachabilityMap& r, std::uint32_t x, std::uint32_t y) {
            const auto d = densify(r, TileCoord{r.params().q, x, y});
            const auto s = static_cast<py::ssize_t>(d.side());
            return to_numpy(d.data, {s, s, 2});
          },
          "x"_a, "y"_a, "L x L x 2 array; channel 0 is emission, 1 is absorption")
      .def(
          "save", [](const ReachabilityMap& r, const std::string& path) { write_rsum(r, path); }, "path"_a)
      .def(
          "export_tensors",
          [](const ReachabilityMap& r, const std::string& path, const std::string& dtype) {
            if (dtype != "f32" && dtype != "f64") throw ParameterError("dtype must be 'f32' or 'f64'");
            return export_dense_tensors(r, {}, path, dtype == "f32" ? DType::f32 : DType::f64);
          },
          "path"_a, "dtype"_a = "f64")
      .def("verify_cke", [](const ReachabilityMap& r) {
        const auto rep = cke_verify(r, touches_neighborhood_border(r));
        return py::dict("status"_a = status_name(rep.status), "states"_a = rep.states, "lhs"_a = rep.lhs,
                        "rhs"_a = rep.rhs, "residual"_a = rep.residual, "rhs_nu_scaled"_a = rep.rhs_nu_scaled);
      });

  m.def(
      "summarize",
      [](const std::string& input, const std::string& format, std::uint32_t zoom, std::uint32_t delta_r,
         const std::string& weighting, std::optional<double> sigma_d, std::optional<double> sigma_t,
         unsigned workers) {
        const auto p = make_params(zoom, delta_r, weighting, sigma_d, sigma_t);
        const auto set = load(input, format, zoom);
        py::gil_scoped_release nogil;
        return build_reachability_map(set, p, workers);
      },
      "input"_a, "format"_a = "generic", "zoom"_a = 24, "delta_r"_a = 12, "weighting"_a = "unit",
      "sigma_d"_a = py::none(), "sigma_t"_a = py::none(), "workers"_a = 1);
  m.def("load_rsum", &read_rsum, "path"_a);

  m.def(
      "read_rten",
      [](const std::string& path) {
        const auto t = read_rten(path);
        std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
        return to_numpy(t.values, shape);
      },
      "path"_a);
  m.def(
      "read_node_index",
      [](const std::string& path, std::uint32_t q) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
        for (const auto& t : read_node_index(path, q)) out.emplace_back(t.x, t.y);
        return out;
      },
      "path"_a, "zoom"_a = 24);

  m.def(
      "write_remb",
      [](const std::string& path, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& tiles,
         py::array_t<float, py::array::c_style | py::array::forcecast> vectors) {
        if (vectors.ndim() != 2 || static_cast<std::size_t>(vectors.shape(0)) != tiles.size()) {
          throw ParameterError("vectors must have shape (len(tiles), d_R)");
        }
        EmbeddingTable t{static_cast<std::uint32_t>(vectors.shape(1)), {}};
        const float* v = vectors.data();
        for (std::size_t i = 0; i < tiles.size(); ++i) {
          t.rows.push_back({tiles[i].first, tiles[i].second, std::vector<float>(v + i * t.d_r, v + (i + 1) * t.d_r)});
        }
        write_remb(t, path);
      },
      "path"_a, "tiles"_a, "vectors"_a);

  m.def(
      "rasterize",
      [](const std::string& kind, std::uint32_t x, std::uint32_t y, std::uint32_t h, std::uint32_t w,
         std::optional<std::string> input, const std::string& format, std::uint32_t zoom,
         std::optional<std::string> embeddings, std::optional<std::uint32_t> d_r, std::optional<std::string> roads,
         bool log_norm) {
        const WindowSpec win{TileCoord{zoom, x, y}, h, w};
        RasterWindow rw;
        if (kind == "crm" || kind == "hcrm" || kind == "sc") {
          if (!input) throw ParameterError(kind + " needs input");
          const auto set = load(*input, format, zoom);
          rw = kind == "crm" ? crm(set, win) : kind == "hcrm" ? hcrm(set, win) : sc(set, win);
        } else if (kind == "rnp") {
          if (!roads) throw ParameterError("rnp needs roads");
          rw = rnp(read_roads(*roads), win);
        } else if (kind == "embedding") {
          if (!embeddings || !d_r) throw ParameterError("embedding needs embeddings and d_r");
          rw = embedding_raster(read_remb(*embeddings), win, *d_r);
        } else {
          throw ParameterError("unknown raster kind '" + kind + "'");
        }
        if (log_norm) rw = log_normalize(rw);
        return py::make_tuple(raster_array(rw), rw.channel_names);
      },
      "kind"_a, "x"_a, "y"_a, "h"_a = kDefaultRasterSide, "w"_a = kDefaultRasterSide, "input"_a = py::none(),
      "format"_a = "generic", "zoom"_a = 24, "embeddings"_a = py::none(), "d_r"_a = py::none(),
      "roads"_a = py::none(), "log_normalize"_a = false,
      "Returns (array of shape (h, w, c), channel names).");

  m.def(
      "preprocess_tdrive",
      [](const std::string& input, std::uint32_t zoom) {
        ParseOptions o;
        o.format = CsvFormat::tdrive;
        o.zoom = zoom;
        const auto split = preprocess_tdrive(parse_csv_path(input, o).set);
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& t : split.trajectories) out.emplace_back(t.id, t.size());
        return out;
      },
      "input"_a, "zoom"_a = 24, "List of (trajectory id, record count).");
}
