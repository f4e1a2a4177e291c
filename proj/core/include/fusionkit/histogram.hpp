#pragma once

#include <string>

#include "fusionkit/types.hpp"

namespace fusionkit {

/// Plot-ready 2-D histogram of a (y, z) point cloud; density sums to 1.
struct HistGrid {
  Vector y_centers;
  Vector z_centers;
  Matrix density;  // y index by z index
};

HistGrid hist2d(const Vector& y, const Vector& z, int bins);
HistGrid hist2d(const Vector& y, const Vector& z, int bins, double y_lo, double y_hi,
                double z_lo, double z_hi);

/// Strict 8-neighbour local maxima with density >= min_frac * max density.
int count_local_maxima(const HistGrid& grid, double min_frac);

/// CSV with columns (y, z, density), one row per cell.
void write_grid_csv(const HistGrid& grid, const std::string& path);

}  // namespace fusionkit
