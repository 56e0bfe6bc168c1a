#include "lsdeconv/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lsdeconv {

void NoiseSpec::validate() const {
    if (!(sigma_g >= 0)) throw std::invalid_argument("NoiseSpec: sigma_g must be >= 0");
    if (!(peak > 0)) throw std::invalid_argument("NoiseSpec: peak must be > 0");
}

Volume make_beads(int nx, int ny, int nz, std::array<int, 3> grid,
                  double bead_radius_vox, std::array<double, 3> pitch) {
    if (grid[0] < 1 || grid[1] < 1 || grid[2] < 1)
        throw std::invalid_argument("make_beads: grid counts must be >= 1");
    const double r = bead_radius_vox;
    const int dims[3] = {nx, ny, nz};
    // bead centres at (m + 0.5) * extent/count; margin check keeps spheres
    // fully inside the volume
    double centres[3][16];
    for (int a = 0; a < 3; ++a) {
        if (grid[a] > 16) throw std::invalid_argument("make_beads: grid too dense");
        const double span = static_cast<double>(dims[a]) / grid[a];
        if (span < 2 * r + 1)
            throw std::invalid_argument("make_beads: grid does not fit in dims");
        for (int m = 0; m < grid[a]; ++m) centres[a][m] = (m + 0.5) * span - 0.5;
    }
    Volume v(nx, ny, nz, 0.0, pitch);
    const double r2 = r * r;
    for (int gk = 0; gk < grid[2]; ++gk)
        for (int gj = 0; gj < grid[1]; ++gj)
            for (int gi = 0; gi < grid[0]; ++gi) {
                const double cx = centres[0][gi], cy = centres[1][gj], cz = centres[2][gk];
                const int i0 = std::max(0, static_cast<int>(std::floor(cx - r)));
                const int i1 = std::min(nx - 1, static_cast<int>(std::ceil(cx + r)));
                const int j0 = std::max(0, static_cast<int>(std::floor(cy - r)));
                const int j1 = std::min(ny - 1, static_cast<int>(std::ceil(cy + r)));
                const int k0 = std::max(0, static_cast<int>(std::floor(cz - r)));
                const int k1 = std::min(nz - 1, static_cast<int>(std::ceil(cz + r)));
                for (int k = k0; k <= k1; ++k)
                    for (int j = j0; j <= j1; ++j)
                        for (int i = i0; i <= i1; ++i) {
                            const double dx = i - cx, dy = j - cy, dz = k - cz;
                            if (dx * dx + dy * dy + dz * dz <= r2) v.at(i, j, k) = 1.0;
                        }
            }
    return v;
}

Volume make_steps(int nx, int ny, int nz, int n_levels, std::array<double, 3> pitch) {
    if (n_levels < 2) throw std::invalid_argument("make_steps: n_levels must be >= 2");
    Volume v(nx, ny, nz, 0.0, pitch);
    for (int k = 0; k < nz; ++k) {
        const int level = std::min(k * n_levels / nz, n_levels - 1);
        const double val = static_cast<double>(level + 1) / n_levels;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) v.at(i, j, k) = val;
    }
    return v;
}

namespace {

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// stateless counter-based stream: value depends only on (key, counter, salt)
uint64_t cbrng(uint64_t key, uint64_t counter, uint64_t salt) {
    return mix64(key * 0x9E3779B97F4A7C15ULL + mix64(counter + salt * 0xD1B54A32D192ED03ULL));
}

double uniform01(uint64_t key, uint64_t counter, uint64_t salt) {
    // (0, 1): shift to 53 bits, offset half an ulp so log() is safe
    return (static_cast<double>(cbrng(key, counter, salt) >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double draw_gaussian(uint64_t key, uint64_t counter) {
    const double u1 = uniform01(key, counter, 1);
    const double u2 = uniform01(key, counter, 2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double draw_poisson(double mean, uint64_t key, uint64_t counter) {
    if (!(mean >= 0)) throw std::invalid_argument("draw_poisson: mean must be >= 0");
    if (mean == 0.0) return 0.0;
    if (mean < 10.0) {
        // inversion by sequential search
        const double L = std::exp(-mean);
        double u = uniform01(key, counter, 3);
        double p = L, cdf = L;
        int k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }
    // PTRS transformed rejection (Hormann 1993)
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    uint64_t salt = 4;
    for (int tries = 0; tries < 1000; ++tries) {
        const double u = uniform01(key, counter, salt++) - 0.5;
        const double v = uniform01(key, counter, salt++);
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return kf;
        if (kf < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            kf * std::log(mean) - mean - std::lgamma(kf + 1.0))
            return kf;
    }
    return std::floor(mean);  // unreachable in practice
}

Volume make_cells(int nx, int ny, int nz, int n_seeds, uint64_t seed,
                  std::array<double, 3> pitch) {
    if (n_seeds < 1) throw std::invalid_argument("make_cells: n_seeds must be >= 1");
    std::vector<std::array<double, 3>> pts(n_seeds);
    for (int m = 0; m < n_seeds; ++m) {
        pts[m][0] = uniform01(seed, m, 10) * nx;
        pts[m][1] = uniform01(seed, m, 11) * ny;
        pts[m][2] = uniform01(seed, m, 12) * nz;
    }
    Volume v(nx, ny, nz, 0.0, pitch);
    const double wall = 1.2;  // membrane half-width, voxels
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                // distance to the two nearest Voronoi sites; their difference
                // vanishes on cell boundaries
                double d1 = 1e300, d2 = 1e300;
                for (const auto& p : pts) {
                    const double dx = i - p[0], dy = j - p[1], dz = k - p[2];
                    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                    if (d < d1) { d2 = d1; d1 = d; }
                    else if (d < d2) { d2 = d; }
                }
                // distance to the domain boundary, for the outer shell
                const double db = std::min({static_cast<double>(i), static_cast<double>(j),
                                            static_cast<double>(k),
                                            static_cast<double>(nx - 1 - i),
                                            static_cast<double>(ny - 1 - j),
                                            static_cast<double>(nz - 1 - k)});
                double m = 0.0;
                if (n_seeds > 1) m = std::max(m, 1.0 - 0.5 * (d2 - d1) / wall);
                m = std::max(m, 1.0 - db / wall);
                m = std::max(0.0, std::min(1.0, m));
                v.at(i, j, k) = 0.15 + 0.85 * m;  // dim interior, bright membranes
            }
    return v;
}

CorruptResult corrupt(const Volume& f_clean, const NoiseSpec& spec) {
    spec.validate();
    const double mx = f_clean.max();
    if (f_clean.min() < 0) throw std::invalid_argument("corrupt: negative clean input");
    if (!(mx > 0)) {
        // all-zero signal: pure Gaussian noise, scale is irrelevant
        CorruptResult r;
        r.scale = 1.0;
        r.f = f_clean;
        if (spec.sigma_g > 0)
#pragma omp parallel for schedule(static)
            for (long long i = 0; i < static_cast<long long>(r.f.size()); ++i)
                r.f.data[i] = spec.sigma_g * draw_gaussian(spec.seed, i);
        return r;
    }
    CorruptResult r;
    r.scale = spec.peak / mx;
    r.f = f_clean;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(r.f.size()); ++i) {
        const double mean = r.scale * f_clean.data[i];
        double x = draw_poisson(mean, spec.seed, i);
        if (spec.sigma_g > 0) x += spec.sigma_g * draw_gaussian(spec.seed, i);
        r.f.data[i] = x;
    }
    return r;
}

}  // namespace lsdeconv
