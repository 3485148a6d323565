#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pluripot/glue.hpp"
#include "pluripot/hyperconvex.hpp"
#include "pluripot/jensen.hpp"

namespace pluripot {

using json = nlohmann::json;

// Minimal SHA-256 (FIPS 180-4) over in-memory bytes; enough for content
// manifests, no streaming interface needed.
inline std::string sha256_hex(const std::string& data) {
  static constexpr std::array<std::uint32_t, 64> K = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
      0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
      0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
      0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
      0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
      0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
      0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
      0xc67178f2};
  std::array<std::uint32_t, 8> H = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::string msg = data;
  const std::uint64_t bits = static_cast<std::uint64_t>(data.size()) * 8;
  msg.push_back(static_cast<char>(0x80));
  while (msg.size() % 64 != 56) msg.push_back('\0');
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));

  auto rotr = [](std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); };
  std::array<std::uint32_t, 64> w{};
  for (std::size_t off = 0; off < msg.size(); off += 64) {
    for (int i = 0; i < 16; ++i)
      w[static_cast<std::size_t>(i)] =
          (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i])) << 24) |
          (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 1])) << 16) |
          (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 2])) << 8) |
          static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 3]));
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[static_cast<std::size_t>(i)] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto [a, b, c, d, e, f, g, hh] = H;
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + S1 + ch + K[static_cast<std::size_t>(i)] + w[static_cast<std::size_t>(i)];
      const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = S0 + maj;
      hh = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    H[0] += a; H[1] += b; H[2] += c; H[3] += d;
    H[4] += e; H[5] += f; H[6] += g; H[7] += hh;
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (const std::uint32_t v : H) out << std::setw(8) << v;
  return out.str();
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadParams("cannot hash missing file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

inline json coords_json(const Lattice& lat, std::int64_t node) {
  const Point p = lat.point(node);
  json a = json::array();
  for (int i = 0; i < lat.dim(); ++i) a.push_back(p[i]);
  return a;
}

inline json to_json(const ViolationReport& r, const Lattice& lat) {
  json j;
  j["worst"] = r.worst;
  j["worst_node"] = r.worst_node;
  if (r.worst_node >= 0) j["worst_coords"] = coords_json(lat, r.worst_node);
  j["worst_pattern"] = r.worst_pattern;
  j["rows"] = r.row_count;
  j["rows_above_tol"] = r.rows_above_tol;
  j["tol"] = r.tol;
  j["histogram"] = {{"lo", r.hist_lo}, {"hi", r.hist_hi}, {"counts", r.hist_counts}};
  return j;
}

inline json to_json(const EnvelopeResult& r) {
  json j;
  j["iterations"] = r.iterations;
  j["final_residual"] = r.final_residual;
  j["converged"] = r.converged;
  j["contact_nodes"] = r.contact.size();
  return j;
}

inline json to_json(const DiscreteMeasure& mu, const Lattice& lat) {
  json arr = json::array();
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    arr.push_back({{"node", mu.nodes[i]},
                   {"coords", coords_json(lat, mu.nodes[i])},
                   {"weight", mu.weights[i]}});
  return arr;
}

inline json to_json(const DualityCertificate& c, const Lattice& lat) {
  json j;
  j["primal"] = c.primal;
  j["dual"] = c.dual;
  j["gap"] = c.gap;
  j["reconstruction_error"] = c.reconstruction_error;
  j["envelope_iterations"] = c.envelope_iterations;
  j["lp_pivots"] = c.lp_pivots;
  j["measure"] = to_json(c.measure, lat);
  return j;
}

inline json to_json(const SupportTestReport& r, const Lattice& lat) {
  json j;
  j["max_interior_mass"] = r.max_interior_mass;
  j["worst_node"] = r.worst_node;
  if (r.worst_node >= 0) j["worst_coords"] = coords_json(lat, r.worst_node);
  j["pass"] = r.pass;
  j["exact"] = r.exact;
  json rows = json::array();
  for (const auto& s : r.samples)
    rows.push_back({{"node", s.node},
                    {"coords", coords_json(lat, s.node)},
                    {"interior_mass", s.interior_mass},
                    {"value", s.value},
                    {"optimal", s.optimal}});
  j["samples"] = rows;
  return j;
}

inline json to_json(const ProbeWitness& w) {
  json j;
  j["probe"] = w.probe_index;
  j["zeta_boundary"] = {w.zeta_boundary.real(), w.zeta_boundary.imag()};
  j["boundary_point"] = {w.boundary_point[0], w.boundary_point[1], w.boundary_point[2],
                         w.boundary_point[3]};
  j["zeta_inside"] = {w.zeta_inside.real(), w.zeta_inside.imag()};
  j["interior_point"] = {w.interior_point[0], w.interior_point[1], w.interior_point[2],
                         w.interior_point[3]};
  return j;
}

inline json to_json(const ClassificationVerdict& v, const Lattice& lat) {
  json j;
  j["verdict"] = verdict_name(v.verdict);
  json reasons = json::array();
  for (const auto& r : v.reasons)
    reasons.push_back({{"test", r.test}, {"outcome", r.outcome}, {"detail", r.detail}});
  j["reasons"] = reasons;
  if (!v.fatness_witnesses.empty()) {
    json w = json::array();
    for (std::size_t i = 0; i < v.fatness_witnesses.size() && i < 16; ++i)
      w.push_back({{"node", v.fatness_witnesses[i]},
                   {"coords", coords_json(lat, v.fatness_witnesses[i])}});
    j["fatness_witnesses"] = w;
    j["fatness_witness_count"] = v.fatness_witnesses.size();
  }
  if (v.probe_witness) j["probe_witness"] = to_json(*v.probe_witness);
  if (!std::isnan(v.exhaustion_violation)) j["exhaustion_violation"] = v.exhaustion_violation;
  if (!std::isnan(v.support_interior_mass)) j["support_interior_mass"] = v.support_interior_mass;
  return j;
}

inline json to_json(const GlueParams& g) {
  return {{"eps", g.eps}, {"K", g.K}, {"M", g.M}, {"target_nodes", g.E.size()}};
}

inline json to_json(const CutoffResult& r) {
  json j;
  j["C"] = r.C;
  j["s"] = r.s;
  j["M"] = r.M;
  j["delta"] = r.delta;
  j["doublings"] = r.doublings;
  j["boundary_error"] = r.boundary_error;
  j["final_violation"] = r.final_violation;
  j["theta_f_second_diff"] = r.theta_f_second_diff;
  return j;
}

} // namespace pluripot
