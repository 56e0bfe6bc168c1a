#pragma once

#include <array>
#include <complex>
#include <vector>

#include "lsdeconv/volume.hpp"

namespace lsdeconv {

/// Microscope parameters. Defaults are the values used throughout the
/// numerical experiments (water-dipping detection objective, 488nm sheet).
struct OpticalConfig {
    double n = 1.35;          // refractive index
    double na_h = 1.0;        // numerical aperture, detection objective
    double na_l = 0.25;       // numerical aperture, light-sheet
    double lambda_h = 0.525;  // wavelength, detection (um)
    double lambda_l = 0.488;  // wavelength, sheet (um)
    double px_x = 0.325;      // lateral pixel size (um)
    double px_y = 0.325;
    double step_z = 1.0;      // axial step (um)
    int nx = 32, ny = 32, nz = 16;
    double sheet_x0 = 0.0;    // lateral focus offset of the sheet (um)

    void validate() const;
    std::array<double, 3> pitch() const { return {px_x, px_y, step_z}; }
};

struct ZernikeCoeffs {
    std::array<double, 15> c{};

    static ZernikeCoeffs zero() { return {}; }
    void validate() const;  // each c_j in [-3, 3]
};

/// j-th Zernike polynomial (1-based, the 15-term table) at polar (rho, theta).
double zernike_eval(int j, double rho, double theta);

/// Pupil value at spatial frequency (kx, ky): zero outside radius NA/lambda,
/// unit modulus inside with phase 2*pi*sum_j c_j Z_j evaluated at the
/// frequency rescaled so the aperture rim maps to rho = 1.
std::complex<double> pupil(double kx, double ky, const ZernikeCoeffs& coeffs,
                           double na, double lambda);

/// Intensity PSF from a pupil sampled on the fftfreq grid (row-major [ny][nx]).
/// z planes are centred: z_k = (k - nz/2) * step_z. Evanescent components
/// ((n/lambda)^2 < k^2) are dropped.
Volume defocus_psf(const std::vector<std::complex<double>>& pupil_grid,
                   int nx, int ny, int nz,
                   double px_x, double px_y, double step_z,
                   double lambda, double n);

/// Separable Gaussian blur, sigma in index units, isotropic, zero-padded.
Volume gaussian_blur3(const Volume& v, double sigma);

/// Detection PSF h: Zernike-aberrated defocus stack, blurred with an
/// isotropic Gaussian of width sigma_blur (in pixels), normalized to sum 1.
Volume detection_psf(const OpticalConfig& cfg, const ZernikeCoeffs& coeffs,
                     double sigma_blur);

/// Light-sheet profile l: the beam propagates along x with transverse
/// frequencies (kz, ky); the result is averaged over y and broadcast, so l is
/// constant along y. Normalized to max 1.
Volume lightsheet_profile(const OpticalConfig& cfg);

/// Indicator of a sphere of the given radius (um) centred on the grid.
Volume rasterize_sphere(int nx, int ny, int nz, std::array<double, 3> pitch,
                        double radius_um);

struct PsfFitResult {
    ZernikeCoeffs coeffs;
    double sigma = 0.5;   // Gaussian blur width (pixels)
    double scale = 1.0;   // intensity gain
    double shift = 0.0;   // intensity offset
    double residual = 0.0;
    bool converged = true;
};

struct PsfFitOptions {
    int max_evals = 4000;
    int restarts = 1;
    double tol = 1e-10;  // simplex spread tolerance on the objective
};

/// Fit Zernike coefficients and blur width to a measured bead image by
/// simplex search on the max-normalized squared error. Both the synthesized
/// model (convolved with the bead indicator) and the data are divided by
/// their maxima; scale is a search parameter and shift is solved in closed
/// form per evaluation.
PsfFitResult fit_psf(const Volume& bead, double bead_radius_um,
                     const OpticalConfig& cfg, const PsfFitResult& init,
                     const PsfFitOptions& opts = {});

}  // namespace lsdeconv
