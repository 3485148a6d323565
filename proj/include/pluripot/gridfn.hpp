#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "pluripot/errors.hpp"
#include "pluripot/mask.hpp"

namespace pluripot {

// Real-valued function sampled on the closure nodes of a mask. Storage covers
// the whole lattice for O(1) indexing; non-closure entries are NaN and must
// never be read by numeric passes. `role` is a free-form tag that ends up in
// reports ("obstacle", "envelope", "exhaustion", ...).
struct GridFunction {
  MaskPtr mask;
  std::vector<double> values;
  std::string role;

  double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
};

inline GridFunction make_grid_function(const MaskPtr& mask,
                                       const std::function<double(const Point&)>& f,
                                       std::string role = "") {
  GridFunction g;
  g.mask = mask;
  g.role = std::move(role);
  g.values.assign(static_cast<std::size_t>(mask->lat.size()),
                  std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t i : mask->closure_nodes) {
    const double v = f(mask->lat.point(i));
    if (!std::isfinite(v)) throw BadParams("grid function value not finite at node " + std::to_string(i));
    g[i] = v;
  }
  return g;
}

inline GridFunction constant_grid_function(const MaskPtr& mask, double c, std::string role = "") {
  return make_grid_function(mask, [c](const Point&) { return c; }, std::move(role));
}

struct ValueRange {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
};

inline ValueRange value_range(const GridFunction& g) {
  ValueRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const std::int64_t i : g.mask->closure_nodes) {
    r.lo = std::min(r.lo, g[i]);
    r.hi = std::max(r.hi, g[i]);
  }
  if (!(r.lo <= r.hi)) return {0.0, 0.0};
  return r;
}

inline void require_same_mask(const GridFunction& a, const GridFunction& b) {
  if (a.mask.get() != b.mask.get())
    throw MaskMismatch("grid functions live on different masks");
}

// Identity check for operations whose arguments must share one mask object.
inline void require_same_mask(const DomainMask& a, const DomainMask& b, const std::string& where) {
  if (&a != &b) throw MaskMismatch(where + ": operands use different masks");
}

// Copy values between masks that share the spacing (possibly different boxes
// or domains): nodes are matched by their exact integer coordinates. Missing
// sources raise OutOfBox; target closure nodes must be source closure nodes.
inline GridFunction transfer_by_coords(const GridFunction& src, const MaskPtr& dst_mask,
                                       std::string role = "") {
  const Lattice& sl = src.mask->lat;
  const Lattice& dl = dst_mask->lat;
  if (std::abs(sl.h() - dl.h()) > 1e-12 * sl.h())
    throw MaskMismatch("transfer requires equal spacing");
  GridFunction g;
  g.mask = dst_mask;
  g.role = std::move(role);
  g.values.assign(static_cast<std::size_t>(dl.size()), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t i : dst_mask->closure_nodes) {
    auto mi = dl.multi(i);
    std::array<std::int64_t, 4> sj{0, 0, 0, 0};
    for (int a = 0; a < dl.dim(); ++a) {
      sj[a] = mi[a] + dl.axis_origin(a) - sl.axis_origin(a);
      if (sj[a] < 0 || sj[a] >= sl.axis_count(a))
        throw OutOfBox("target node not present in source lattice");
    }
    const std::int64_t si = sl.flat(sj);
    if (!src.mask->in_closure(si)) throw MaskMismatch("target closure node exterior in source");
    g[i] = src[si];
  }
  return g;
}

// CSV emission. Columns use '.' decimals and ',' separators; headers are
// always written; rows follow ascending node index so repeated runs produce
// identical bytes.
inline void dump_mask_csv(const DomainMask& mask, std::ostream& os) {
  os << "index";
  for (int a = 0; a < mask.lat.dim(); ++a) os << ",x" << (a + 1);
  os << ",class\n";
  char buf[64];
  for (std::int64_t i = 0; i < mask.lat.size(); ++i) {
    const Point p = mask.lat.point(i);
    os << i;
    for (int a = 0; a < mask.lat.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", p[a]);
      os << ',' << buf;
    }
    os << ',' << node_class_name(mask.at(i)) << '\n';
  }
}

inline void dump_grid_csv(const GridFunction& g, std::ostream& os) {
  const Lattice& lat = g.mask->lat;
  os << "index";
  for (int a = 0; a < lat.dim(); ++a) os << ",x" << (a + 1);
  os << ",value\n";
  char buf[64];
  for (const std::int64_t i : g.mask->closure_nodes) {
    const Point p = lat.point(i);
    os << i;
    for (int a = 0; a < lat.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", p[a]);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", g[i]);
    os << ',' << buf << '\n';
  }
}

// gnuplot-style columns: x y value triples with blank lines between grid rows
// (splot ... with pm3d). For n=2 the dump fixes the w coordinates at the
// node plane closest to the box centre and scans the z plane.
inline void dump_plot_columns(const GridFunction& g, std::ostream& os) {
  const Lattice& lat = g.mask->lat;
  char buf[96];
  std::array<std::int64_t, 4> mi{0, 0, 0, 0};
  if (lat.dim() == 4) {
    for (int a = 2; a < 4; ++a) mi[a] = lat.axis_count(a) / 2;
  }
  for (std::int64_t i0 = 0; i0 < lat.axis_count(0); ++i0) {
    for (std::int64_t i1 = 0; i1 < lat.axis_count(1); ++i1) {
      mi[0] = i0;
      mi[1] = i1;
      const std::int64_t f = lat.flat(mi);
      const double v = g.mask->in_closure(f) ? g[f] : std::numeric_limits<double>::quiet_NaN();
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", lat.coord(0, i0), lat.coord(1, i1), v);
      os << buf << '\n';
    }
    os << '\n';
  }
}

} // namespace pluripot
