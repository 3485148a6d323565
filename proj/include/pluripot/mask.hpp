#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pluripot/domains.hpp"
#include "pluripot/lattice.hpp"

namespace pluripot {

enum class NodeClass : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };

inline const char* node_class_name(NodeClass c) {
  switch (c) {
    case NodeClass::Interior: return "interior";
    case NodeClass::Boundary: return "boundary";
    default: return "exterior";
  }
}

// Node classification of a lattice against a domain. Holds copies of both the
// lattice and the domain spec so downstream passes (cones, probes, fatness)
// can re-evaluate predicates without threading extra arguments around.
struct DomainMask {
  Lattice lat;
  DomainSpec dom;
  bool window = false;
  std::vector<NodeClass> cls;                // size lat.size()
  std::vector<std::int64_t> closure_nodes;   // ascending flat index
  std::vector<std::int64_t> interior_nodes;
  std::vector<std::int64_t> boundary_nodes;

  DomainMask(Lattice l, DomainSpec d) : lat(std::move(l)), dom(std::move(d)) {}

  NodeClass at(std::int64_t i) const { return cls[static_cast<std::size_t>(i)]; }
  bool in_closure(std::int64_t i) const { return at(i) != NodeClass::Exterior; }
  bool is_interior(std::int64_t i) const { return at(i) == NodeClass::Interior; }
};

using MaskPtr = std::shared_ptr<const DomainMask>;

// Classify every lattice node as interior / boundary / exterior.
//
// A closure node is Boundary when (a) the domain's interior predicate fails at
// it, (b) an axis neighbour (evaluated at its exact coordinates, whether or
// not it is a grid node) leaves the closure, or (c) |rho| <= h * L where L is
// the domain's collar constant. Everything else in the closure is Interior.
// A final pass demotes any interior node whose axis star is not fully
// available as in-range closure nodes, so interior nodes always carry a
// complete second-difference star. With window=true the lattice is treated as
// a viewing window into a larger domain: the coverage precondition is skipped
// and off-window neighbours are judged by predicate only.
// The lattice box must enclose the domain's bounding box with a 2h margin, so
// classification never runs out of neighbours at domain points.
inline void require_covers(const Lattice& lat, const DomainSpec& dom) {
  if (lat.n() != dom.n) throw DimensionMismatch("lattice and domain dimension differ");
  const double h = lat.h();
  for (int a = 0; a < lat.dim(); ++a) {
    const double slack = 1e-12 * (1.0 + std::abs(dom.bbox_lo[a]) + std::abs(dom.bbox_hi[a]));
    if (lat.box_lo(a) > dom.bbox_lo[a] - 2.0 * h + slack ||
        lat.box_hi(a) < dom.bbox_hi[a] + 2.0 * h - slack)
      throw DomainNotCovered("lattice box needs a 2h margin around the domain on axis " +
                             std::to_string(a));
  }
}

inline MaskPtr classify_nodes(const Lattice& lat, const DomainSpec& dom, bool window = false) {
  if (lat.n() != dom.n) throw DimensionMismatch("lattice and domain dimension differ");
  const double h = lat.h();
  if (!window) require_covers(lat, dom);

  auto mask = std::make_shared<DomainMask>(lat, dom);
  mask->window = window;
  mask->cls.assign(static_cast<std::size_t>(lat.size()), NodeClass::Exterior);

  const double collar = h * dom.collar_lipschitz;
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    const Point p = lat.point(i);
    if (!dom.closure(p)) continue;
    bool boundary = !dom.interior(p);
    if (!boundary && collar > 0.0 && std::abs(dom.rho(p)) <= collar * (1.0 + 1e-12))
      boundary = true;
    if (!boundary) {
      const auto mi = lat.multi(i);
      for (int a = 0; a < lat.dim() && !boundary; ++a) {
        for (int s = -1; s <= 1 && !boundary; s += 2) {
          Point q = p;
          q[a] = lat.coord(a, mi[a] + s);
          if (!dom.closure(q)) boundary = true;
        }
      }
    }
    mask->cls[static_cast<std::size_t>(i)] = boundary ? NodeClass::Boundary : NodeClass::Interior;
  }

  // Demote interior nodes whose axis star leaves the stored grid (only
  // possible in window mode, where closure may continue past the box edge).
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    if (mask->cls[static_cast<std::size_t>(i)] != NodeClass::Interior) continue;
    bool full = true;
    for (int a = 0; a < lat.dim() && full; ++a)
      for (int s = -1; s <= 1 && full; s += 2) {
        const std::int64_t nb = lat.step(i, a, s);
        if (nb < 0 || mask->cls[static_cast<std::size_t>(nb)] == NodeClass::Exterior) full = false;
      }
    if (!full) mask->cls[static_cast<std::size_t>(i)] = NodeClass::Boundary;
  }

  for (std::int64_t i = 0; i < lat.size(); ++i) {
    switch (mask->cls[static_cast<std::size_t>(i)]) {
      case NodeClass::Interior:
        mask->closure_nodes.push_back(i);
        mask->interior_nodes.push_back(i);
        break;
      case NodeClass::Boundary:
        mask->closure_nodes.push_back(i);
        mask->boundary_nodes.push_back(i);
        break;
      default: break;
    }
  }
  return mask;
}

} // namespace pluripot
