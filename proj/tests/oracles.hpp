#pragma once

// Brute-force reference implementations used only by tests. These share no
// code with the production paths: direct triple sums, refined grid searches,
// dense linear algebra. Keep this file free of lsdeconv includes other than
// volume.hpp.

#include <functional>
#include <utility>
#include <vector>

#include "lsdeconv/volume.hpp"

namespace oracle {

using lsdeconv::Volume;

/// Literal evaluation of the spatially varying forward model:
/// f[i,j,k] = (1/C) sum_{i',j',w} l[i',j',w] u[i',j',w-k+cz] h[i-i'+cx, j-j'+cy, w],
/// zero outside the index range. Guarded to <= 16x16x8.
Volume naive_apply_L(const Volume& l, const Volume& h, const Volume& u, double c);

/// Matching adjoint by direct summation (same guard).
Volume naive_adjoint_L(const Volume& l, const Volume& h, const Volume& f, double c);

/// Coarse-to-fine exhaustive 2D minimization of
///   u - v + v log(v/u) + (1/2g)[(u-u*)^2 + (v-v*)^2] over u,v >= 0,
/// refined until the grid step drops below final_step.
std::pair<double, double> grid_prox_kl(double u_star, double v_star, double gamma,
                                       double final_step = 1e-4);

/// Coarse-to-fine maximization of u u* + v v* - u + v - v log(v/u)
/// over [l1,l2]^2.
double grid_conj_kl(double u_star, double v_star, double l1, double l2,
                    double final_step = 1e-6);

/// Columns = op applied to canonical basis volumes; row-major n x n.
/// Guarded to total size <= 4096.
std::vector<double> dense_materialize(const std::function<Volume(const Volume&)>& op,
                                      int nx, int ny, int nz);

/// Largest singular value of a dense row-major n x n matrix (LAPACK dgesvd).
double dense_largest_sv(std::vector<double> m, int n);

/// Direct windowed-loop SSIM (non-separable Gaussian weights, valid region).
double naive_ssim3(const Volume& u, const Volume& u0, int window, double gauss_sigma,
                   double dynamic_range);

/// Monte-Carlo mean of F(Y) = 2*(Y log(Y/beta) + beta - Y) for Y ~ Pois(beta),
/// std-library RNG (independent of the production sampler).
double monte_carlo_mean_F(double beta, int n_draws, uint64_t seed);

}  // namespace oracle
