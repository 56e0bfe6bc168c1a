#pragma once

#include <array>
#include <cstdint>

#include "lsdeconv/volume.hpp"

namespace lsdeconv {

/// Mixed Poisson-Gaussian corruption model for simulated data.
struct NoiseSpec {
    double sigma_g = 10.0;  // Gaussian std, counts
    double peak = 2000.0;   // target max of the clean signal, counts
    uint64_t seed = 1;

    void validate() const;
};

/// Regular grid of binary spheres (intensity 1 inside, 0 outside).
/// Throws if the grid with margins does not fit inside dims.
Volume make_beads(int nx, int ny, int nz, std::array<int, 3> grid = {5, 5, 5},
                  double bead_radius_vox = 1.5,
                  std::array<double, 3> pitch = {1.0, 1.0, 1.0});

/// Axis-aligned slabs along z with intensities linearly spaced in (0, 1].
Volume make_steps(int nx, int ny, int nz, int n_levels = 4,
                  std::array<double, 3> pitch = {1.0, 1.0, 1.0});

/// Procedural Voronoi-membrane phantom: bright cell boundaries over dim
/// interiors. Deterministic per seed.
Volume make_cells(int nx, int ny, int nz, int n_seeds, uint64_t seed,
                  std::array<double, 3> pitch = {1.0, 1.0, 1.0});

struct CorruptResult {
    Volume f;      // noisy data, counts (may go negative from the Gaussian)
    double scale;  // factor applied to f_clean so its max hit spec.peak
};

/// Rescale f_clean so max = peak, then per-voxel Pois(mean) + N(0, sigma_g).
/// Draws are keyed on (seed, voxel index) so the result is independent of
/// evaluation order and thread count. Throws on negative clean input.
CorruptResult corrupt(const Volume& f_clean, const NoiseSpec& spec);

/// Counter-based scalar draws, exposed for tests and the tuning module's
/// Monte-Carlo calibration.
double draw_poisson(double mean, uint64_t key, uint64_t counter);
double draw_gaussian(uint64_t key, uint64_t counter);  // standard normal

}  // namespace lsdeconv
