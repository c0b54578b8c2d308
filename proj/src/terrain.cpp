#include "gaitlab/terrain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "gaitlab/common.hpp"

namespace gaitlab {

namespace {

constexpr std::array<double, 4> kLevelCaps = {0.0, 0.06, 0.13, 0.20};

// Classic 2-D gradient noise with a seeded permutation table.
class GradientNoise {
 public:
  explicit GradientNoise(std::uint64_t seed) {
    std::iota(perm_.begin(), perm_.begin() + 256, 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm_.begin(), perm_.begin() + 256, rng);
    std::copy(perm_.begin(), perm_.begin() + 256, perm_.begin() + 256);
  }

  double operator()(double x, double y) const {
    const int xi = static_cast<int>(std::floor(x)) & 255;
    const int yi = static_cast<int>(std::floor(y)) & 255;
    const double xf = x - std::floor(x);
    const double yf = y - std::floor(y);
    const double u = fade(xf);
    const double v = fade(yf);
    const int aa = perm_[perm_[xi] + yi];
    const int ab = perm_[perm_[xi] + yi + 1];
    const int ba = perm_[perm_[xi + 1] + yi];
    const int bb = perm_[perm_[xi + 1] + yi + 1];
    const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1.0, yf), u);
    const double x2 = lerp(grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0), u);
    return lerp(x1, x2, v);
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
  static double lerp(double a, double b, double t) { return a + t * (b - a); }
  static double grad(int hash, double x, double y) {
    switch (hash & 7) {
      case 0: return x + y;
      case 1: return -x + y;
      case 2: return x - y;
      case 3: return -x - y;
      case 4: return x;
      case 5: return -x;
      case 6: return y;
      default: return -y;
    }
  }

  std::array<int, 512> perm_{};
};

}  // namespace

double Terrain::level_cap(int level) {
  if (level < 0 || level > 3) throw InvalidInput("terrain level must be in [0, 3]");
  return kLevelCaps[static_cast<size_t>(level)];
}

double Terrain::height(double x, double y) const {
  if (level == 0) return 0.0;
  const double gx = std::clamp((x - origin_x) / cell, 0.0, static_cast<double>(nx - 1));
  const double gy = std::clamp((y - origin_y) / cell, 0.0, static_cast<double>(ny - 1));
  const int ix = std::min(static_cast<int>(gx), nx - 2);
  const int iy = std::min(static_cast<int>(gy), ny - 2);
  const double fx = gx - ix;
  const double fy = gy - iy;
  const double h00 = at(ix, iy);
  const double h10 = at(ix + 1, iy);
  const double h01 = at(ix, iy + 1);
  const double h11 = at(ix + 1, iy + 1);
  return (1.0 - fy) * ((1.0 - fx) * h00 + fx * h10) + fy * ((1.0 - fx) * h01 + fx * h11);
}

double Terrain::peak_to_trough() const {
  const auto [lo, hi] = std::minmax_element(heights.begin(), heights.end());
  return *hi - *lo;
}

Terrain flat_terrain(double friction) {
  Terrain t;
  t.friction = friction;
  return t;
}

Terrain generate_terrain(int level, std::uint64_t seed, const TerrainSpec& spec) {
  const double cap = Terrain::level_cap(level);
  if (spec.nx < 2 || spec.ny < 2 || !(spec.cell > 0.0)) throw InvalidInput("terrain grid too small");

  Terrain t;
  t.level = level;
  t.seed = seed;
  t.nx = spec.nx;
  t.ny = spec.ny;
  t.cell = spec.cell;
  t.origin_x = spec.origin_x;
  t.origin_y = spec.origin_y;
  t.friction = spec.friction;
  t.heights.assign(static_cast<size_t>(spec.nx) * static_cast<size_t>(spec.ny), 0.0);
  if (level == 0) return t;

  const GradientNoise noise(seed);
  for (int iy = 0; iy < spec.ny; ++iy) {
    for (int ix = 0; ix < spec.nx; ++ix) {
      const double x = ix * spec.cell;
      const double y = iy * spec.cell;
      double freq = 1.0 / spec.base_wavelength;
      double amp = 1.0;
      double h = 0.0;
      for (int o = 0; o < spec.octaves; ++o) {
        h += amp * noise(x * freq + 17.3 * o, y * freq + 31.7 * o);
        freq *= 2.0;
        amp *= spec.persistence;
      }
      t.heights[static_cast<size_t>(iy) * static_cast<size_t>(spec.nx) + static_cast<size_t>(ix)] = h;
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(t.heights.begin(), t.heights.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& h : t.heights) h = range > 0.0 ? (h - lo) / range * cap : 0.0;
  return t;
}

void export_terrain(const Terrain& terrain, std::ostream& out) {
  out << "# terrain level=" << terrain.level << " seed=" << terrain.seed << " nx=" << terrain.nx
      << " ny=" << terrain.ny << " cell=" << terrain.cell << " origin_x=" << terrain.origin_x
      << " origin_y=" << terrain.origin_y << " friction=" << terrain.friction << '\n';
  out << std::setprecision(9);
  for (int iy = 0; iy < terrain.ny; ++iy) {
    for (int ix = 0; ix < terrain.nx; ++ix) {
      if (ix) out << ' ';
      out << terrain.at(ix, iy);
    }
    out << '\n';
  }
}

}  // namespace gaitlab
