#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace gaitlab {

/// Grid layout of a generated heightfield. The default covers x in [-5, 43) m and
/// y in [-8, 8) m, enough for a 1.5 m/s velocity sweep of ~25 s.
struct TerrainSpec {
  int nx = 480;
  int ny = 160;
  double cell = 0.1;
  double origin_x = -5.0;
  double origin_y = -8.0;
  int octaves = 5;
  double base_wavelength = 2.0;
  double persistence = 0.5;
  double friction = 0.6;
};

/// Heightfield terrain; heights are bilinearly interpolated and clamped at the grid edge.
struct Terrain {
  int level = 0;
  std::uint64_t seed = 0;
  int nx = 2;
  int ny = 2;
  double cell = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double friction = 0.6;
  std::vector<double> heights = std::vector<double>(4, 0.0);

  double height(double x, double y) const;
  double at(int ix, int iy) const { return heights[static_cast<size_t>(iy) * static_cast<size_t>(nx) + static_cast<size_t>(ix)]; }
  double peak_to_trough() const;

  /// Peak-to-trough height of each roughness level: 0, 0.06, 0.13, 0.20 m.
  static double level_cap(int level);
};

/// Flat ground (level 0) with the given friction coefficient.
Terrain flat_terrain(double friction = 0.6);

/// Multi-octave gradient-noise heightfield rescaled so max - min equals the level cap.
Terrain generate_terrain(int level, std::uint64_t seed, const TerrainSpec& spec = {});

/// Plain-text grid: a '#' header line with the layout, then one row of heights per y index.
void export_terrain(const Terrain& terrain, std::ostream& out);

}  // namespace gaitlab
