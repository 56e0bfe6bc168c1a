#pragma once

#include "lsdeconv/volume.hpp"

namespace lsdeconv {

struct MetricReport {
    double l2_normalized = 0.0;
    double ssim = 0.0;   // in [-1, 1]
    double psnr = 0.0;   // dB, against the ground truth's dynamic range
};

/// ||u - u0|| / ||u0||. Throws if ||u0|| = 0.
double l2_error(const Volume& u, const Volume& u0);

/// Mean structural similarity over Gaussian-weighted 3D windows.
/// dynamic_range <= 0 means "take max-min of u0". Window must be odd, >= 3,
/// and no larger than any volume dimension.
double ssim3(const Volume& u, const Volume& u0, int window = 7,
             double gauss_sigma = 1.5, double dynamic_range = -1.0);

double psnr(const Volume& u, const Volume& u0, double dynamic_range = -1.0);

MetricReport evaluate(const Volume& u, const Volume& u0);

}  // namespace lsdeconv
