#include "fusionkit/histogram.hpp"

#include <algorithm>
#include <fstream>

#include "fusionkit/csv.hpp"
#include "fusionkit/errors.hpp"

namespace fusionkit {

HistGrid hist2d(const Vector& y, const Vector& z, int bins) {
  if (y.size() == 0) throw ValidationError("hist2d: empty input");
  return hist2d(y, z, bins, y.minCoeff(), y.maxCoeff(), z.minCoeff(), z.maxCoeff());
}

HistGrid hist2d(const Vector& y, const Vector& z, int bins, double y_lo, double y_hi,
                double z_lo, double z_hi) {
  if (bins < 2) throw ValidationError("hist2d: need at least 2 bins");
  if (y.size() != z.size()) throw ValidationError("hist2d: size mismatch");
  if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
  if (!(z_hi > z_lo)) z_hi = z_lo + 1.0;

  HistGrid grid;
  grid.y_centers.resize(bins);
  grid.z_centers.resize(bins);
  const double wy = (y_hi - y_lo) / bins;
  const double wz = (z_hi - z_lo) / bins;
  for (int b = 0; b < bins; ++b) {
    grid.y_centers(b) = y_lo + (b + 0.5) * wy;
    grid.z_centers(b) = z_lo + (b + 0.5) * wz;
  }
  grid.density = Matrix::Zero(bins, bins);

  Index inside = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const int by = static_cast<int>((y(i) - y_lo) / wy);
    const int bz = static_cast<int>((z(i) - z_lo) / wz);
    if (by < 0 || bz < 0 || by > bins || bz > bins) continue;
    const int cy = std::min(by, bins - 1);
    const int cz = std::min(bz, bins - 1);
    grid.density(cy, cz) += 1.0;
    ++inside;
  }
  if (inside > 0) grid.density /= static_cast<double>(inside);
  return grid;
}

int count_local_maxima(const HistGrid& grid, double min_frac) {
  const Index bins = grid.density.rows();
  const double cutoff = min_frac * grid.density.maxCoeff();
  int count = 0;
  for (Index i = 0; i < bins; ++i) {
    for (Index j = 0; j < bins; ++j) {
      const double v = grid.density(i, j);
      if (v < cutoff || v <= 0.0) continue;
      bool is_max = true;
      for (Index di = -1; di <= 1 && is_max; ++di) {
        for (Index dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const Index ni = i + di;
          const Index nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= bins || nj >= bins) continue;
          if (grid.density(ni, nj) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) ++count;
    }
  }
  return count;
}

void write_grid_csv(const HistGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << "y,z,density\n";
  for (Index i = 0; i < grid.density.rows(); ++i)
    for (Index j = 0; j < grid.density.cols(); ++j)
      out << format_double(grid.y_centers(i)) << "," << format_double(grid.z_centers(j))
          << "," << format_double(grid.density(i, j)) << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

}  // namespace fusionkit
