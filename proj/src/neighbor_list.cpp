#include "mace/neighbor_list.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "mace/errors.hpp"

namespace mace {
namespace {

using Mat3 = std::array<Vec3, 3>;

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double volume(const Mat3& lat) { return dot(lat[0], cross(lat[1], lat[2])); }

// Rows of the inverse-transpose: fractional coordinate f_a = x · recip[a].
Mat3 reciprocal(const Mat3& lat) {
  const double v = volume(lat);
  if (!std::isfinite(v) || std::fabs(v) < 1e-12) throw DataError("neighbor list: singular cell");
  Mat3 rec{cross(lat[1], lat[2]), cross(lat[2], lat[0]), cross(lat[0], lat[1])};
  for (auto& row : rec)
    for (double& x : row) x /= v;
  return rec;
}

Vec3 plane_spacings(const Mat3& lat) {
  const double v = std::fabs(volume(lat));
  return {v / norm(cross(lat[1], lat[2])), v / norm(cross(lat[2], lat[0])), v / norm(cross(lat[0], lat[1]))};
}

struct Frame {
  Mat3 lattice{};
  std::array<bool, 3> pbc{false, false, false};
};

Frame frame_of(const Configuration& config) {
  Frame f;
  if (config.cell && config.cell->any_periodic()) {
    f.lattice = config.cell->lattice;
    f.pbc = config.cell->pbc;
  } else {
    f.lattice = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  }
  return f;
}

// Shared by both constructions so that identical edges carry identical bits.
bool make_edge(const Configuration& config, const Frame& frame, std::size_t i, std::size_t j,
               const std::array<int, 3>& shift, double r_cut, Edge& out) {
  if (i == j && shift == std::array<int, 3>{0, 0, 0}) return false;
  Vec3 d{};
  for (int a = 0; a < 3; ++a) {
    double s = 0.0;
    for (int b = 0; b < 3; ++b) s += shift[b] * frame.lattice[b][a];
    d[a] = config.positions[j][a] + s - config.positions[i][a];
  }
  const double r = norm(d);
  if (r < 1e-6) {
    throw DataError("neighbor list: atoms " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  }
  if (!(r < r_cut)) return false;
  out.receiver = i;
  out.sender = j;
  out.shift = shift;
  out.r = r;
  out.unit_vec = {d[0] / r, d[1] / r, d[2] / r};
  return true;
}

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.receiver, a.sender, a.shift) < std::tie(b.receiver, b.sender, b.shift);
  });
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::array<int, 3> required_shift_range(const Cell& cell, double r_cut) {
  reciprocal(cell.lattice);  // singularity check
  const Vec3 spacing = plane_spacings(cell.lattice);
  std::array<int, 3> n{0, 0, 0};
  for (int a = 0; a < 3; ++a)
    if (cell.pbc[a]) n[a] = static_cast<int>(std::ceil(r_cut / spacing[a]));
  return n;
}

NeighborList build_neighbor_list_brute_force(const Configuration& config, double r_cut) {
  if (!(r_cut > 0.0)) throw ContractViolation("neighbor list: r_cut must be positive");
  const Frame frame = frame_of(config);
  const Mat3 rec = reciprocal(frame.lattice);
  const std::size_t n = config.size();

  // Shifts are searched relative to the wrapped image of each atom, so the
  // range covers r_cut plus one cell for the wrapping offset.
  std::array<int, 3> range{0, 0, 0};
  std::vector<std::array<long, 3>> wrap(n, {0, 0, 0});
  if (config.periodic()) {
    const auto base = required_shift_range(*config.cell, r_cut);
    for (int a = 0; a < 3; ++a) range[a] = frame.pbc[a] ? base[a] + 1 : 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a)
        if (frame.pbc[a]) wrap[i][a] = static_cast<long>(std::floor(dot(config.positions[i], rec[a])));
  }

  NeighborList list{r_cut, {}};
  Edge e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (int s0 = -range[0]; s0 <= range[0]; ++s0) {
        for (int s1 = -range[1]; s1 <= range[1]; ++s1) {
          for (int s2 = -range[2]; s2 <= range[2]; ++s2) {
            const std::array<int, 3> shift{static_cast<int>(s0 + wrap[i][0] - wrap[j][0]),
                                           static_cast<int>(s1 + wrap[i][1] - wrap[j][1]),
                                           static_cast<int>(s2 + wrap[i][2] - wrap[j][2])};
            if (make_edge(config, frame, i, j, shift, r_cut, e)) list.edges.push_back(e);
          }
        }
      }
    }
  }
  sort_edges(list.edges);
  return list;
}

NeighborList build_neighbor_list(const Configuration& config, double r_cut) {
  if (!(r_cut > 0.0)) throw ContractViolation("neighbor list: r_cut must be positive");
  const Frame frame = frame_of(config);
  const Mat3 rec = reciprocal(frame.lattice);
  const Vec3 spacing = plane_spacings(frame.lattice);
  const std::size_t n = config.size();
  NeighborList list{r_cut, {}};
  if (n == 0) return list;

  std::vector<Vec3> frac(n);
  std::vector<std::array<long, 3>> wrap(n, {0, 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      double f = dot(config.positions[i], rec[a]);
      if (frame.pbc[a]) {
        const double fl = std::floor(f);
        wrap[i][a] = static_cast<long>(fl);
        f -= fl;
        if (f >= 1.0) f = 0.0;  // rounding of tiny negatives
      }
      frac[i][a] = f;
    }
  }

  // Bin layout per direction: [origin, origin + extent) in fractional units.
  std::array<double, 3> origin{}, extent{};
  std::array<long, 3> nbins{}, reach{};
  for (int a = 0; a < 3; ++a) {
    if (frame.pbc[a]) {
      origin[a] = 0.0;
      extent[a] = 1.0;
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Vec3& f : frac) {
        lo = std::min(lo, f[a]);
        hi = std::max(hi, f[a]);
      }
      origin[a] = lo;
      extent[a] = std::max(hi - lo, 1e-9);
    }
    nbins[a] = std::max(1L, static_cast<long>(std::floor(extent[a] * spacing[a] / r_cut)));
  }
  // Keep the bin count proportional to the atom count for sparse inputs.
  const double max_bins = std::max<double>(8.0 * static_cast<double>(n), 1.0);
  while (static_cast<double>(nbins[0]) * nbins[1] * nbins[2] > max_bins) {
    auto it = std::max_element(nbins.begin(), nbins.end());
    *it = std::max(1L, *it / 2);
  }
  for (int a = 0; a < 3; ++a) {
    const double width = extent[a] * spacing[a] / static_cast<double>(nbins[a]);
    if (frame.pbc[a]) reach[a] = static_cast<long>(std::ceil(r_cut / width));
    else reach[a] = nbins[a] > 1 ? static_cast<long>(std::ceil(r_cut / width)) : 0;
  }

  auto bin_of = [&](const Vec3& f) {
    std::array<long, 3> b{};
    for (int a = 0; a < 3; ++a) {
      long v = static_cast<long>(std::floor((f[a] - origin[a]) / extent[a] * static_cast<double>(nbins[a])));
      b[a] = std::clamp(v, 0L, nbins[a] - 1);
    }
    return b;
  };
  auto flat = [&](const std::array<long, 3>& b) { return static_cast<std::size_t>((b[0] * nbins[1] + b[1]) * nbins[2] + b[2]); };

  const std::size_t total_bins = static_cast<std::size_t>(nbins[0] * nbins[1] * nbins[2]);
  std::vector<std::size_t> bin_start(total_bins + 1, 0), members(n);
  std::vector<std::array<long, 3>> atom_bin(n);
  for (std::size_t i = 0; i < n; ++i) {
    atom_bin[i] = bin_of(frac[i]);
    ++bin_start[flat(atom_bin[i]) + 1];
  }
  for (std::size_t b = 0; b < total_bins; ++b) bin_start[b + 1] += bin_start[b];
  {
    std::vector<std::size_t> fill(bin_start.begin(), bin_start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) members[fill[flat(atom_bin[i])]++] = i;
  }

  Edge e;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& bi = atom_bin[i];
    for (long o0 = -reach[0]; o0 <= reach[0]; ++o0) {
      for (long o1 = -reach[1]; o1 <= reach[1]; ++o1) {
        for (long o2 = -reach[2]; o2 <= reach[2]; ++o2) {
          const long off[3] = {o0, o1, o2};
          std::array<long, 3> target{};
          std::array<long, 3> image{0, 0, 0};
          bool valid = true;
          for (int a = 0; a < 3; ++a) {
            const long t = bi[a] + off[a];
            if (frame.pbc[a]) {
              image[a] = floor_div(t, nbins[a]);
              target[a] = t - image[a] * nbins[a];
            } else if (t < 0 || t >= nbins[a]) {
              valid = false;
            } else {
              target[a] = t;
            }
          }
          if (!valid) continue;
          const std::size_t b = flat(target);
          for (std::size_t q = bin_start[b]; q < bin_start[b + 1]; ++q) {
            const std::size_t j = members[q];
            const std::array<int, 3> shift{static_cast<int>(image[0] + wrap[i][0] - wrap[j][0]),
                                           static_cast<int>(image[1] + wrap[i][1] - wrap[j][1]),
                                           static_cast<int>(image[2] + wrap[i][2] - wrap[j][2])};
            if (make_edge(config, frame, i, j, shift, r_cut, e)) list.edges.push_back(e);
          }
        }
      }
    }
  }
  sort_edges(list.edges);
  return list;
}

}  // namespace mace
