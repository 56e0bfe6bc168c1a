#include "lsdeconv/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lsdeconv {

double l2_error(const Volume& u, const Volume& u0) {
    if (!u.same_dims(u0)) throw std::invalid_argument("l2_error: dimension mismatch");
    const double denom = norm2(u0);
    if (denom == 0.0) throw std::invalid_argument("l2_error: ground truth has zero norm");
    return norm2(u - u0) / denom;
}

namespace {

std::vector<double> gauss_kernel(int window, double sigma) {
    std::vector<double> k(window);
    const int h = window / 2;
    double s = 0.0;
    for (int i = 0; i < window; ++i) {
        k[i] = std::exp(-0.5 * (i - h) * (i - h) / (sigma * sigma));
        s += k[i];
    }
    for (double& x : k) x /= s;
    return k;
}

// separable correlation, zero padding; only the valid interior is consumed
Volume filter1(const Volume& v, const std::vector<double>& k, int axis) {
    const int h = static_cast<int>(k.size()) / 2;
    Volume out(v.nx, v.ny, v.nz, 0.0, v.pitch, v.origin);
#pragma omp parallel for schedule(static)
    for (int kk = 0; kk < v.nz; ++kk)
        for (int j = 0; j < v.ny; ++j)
            for (int i = 0; i < v.nx; ++i) {
                double s = 0.0;
                for (int t = -h; t <= h; ++t) {
                    int ii = i, jj = j, kz = kk;
                    if (axis == 0) ii += t;
                    else if (axis == 1) jj += t;
                    else kz += t;
                    if (ii < 0 || ii >= v.nx || jj < 0 || jj >= v.ny || kz < 0 || kz >= v.nz)
                        continue;
                    s += k[t + h] * v.at(ii, jj, kz);
                }
                out.at(i, j, kk) = s;
            }
    return out;
}

Volume filter3(const Volume& v, const std::vector<double>& k) {
    return filter1(filter1(filter1(v, k, 0), k, 1), k, 2);
}

}  // namespace

double ssim3(const Volume& u, const Volume& u0, int window, double gauss_sigma,
             double dynamic_range) {
    if (!u.same_dims(u0)) throw std::invalid_argument("ssim3: dimension mismatch");
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("ssim3: window must be odd and >= 3");
    if (u.nx < window || u.ny < window || u.nz < window)
        throw std::invalid_argument("ssim3: volume smaller than window");
    double dr = dynamic_range;
    if (dr <= 0) dr = u0.max() - u0.min();
    if (dr <= 0) dr = 1.0;
    const double c1 = 0.01 * dr * 0.01 * dr;
    const double c2 = 0.03 * dr * 0.03 * dr;

    const auto k = gauss_kernel(window, gauss_sigma);
    Volume uu = u, u00 = u0, uv = u;
    for (size_t i = 0; i < u.size(); ++i) {
        uu.data[i] = u.data[i] * u.data[i];
        u00.data[i] = u0.data[i] * u0.data[i];
        uv.data[i] = u.data[i] * u0.data[i];
    }
    Volume m1 = filter3(u, k), m2 = filter3(u0, k);
    Volume s11 = filter3(uu, k), s22 = filter3(u00, k), s12 = filter3(uv, k);

    const int h = window / 2;
    double acc = 0.0;
    long long count = 0;
    for (int kk = h; kk < u.nz - h; ++kk)
        for (int j = h; j < u.ny - h; ++j)
            for (int i = h; i < u.nx - h; ++i) {
                const double mu1 = m1.at(i, j, kk), mu2 = m2.at(i, j, kk);
                const double v1 = s11.at(i, j, kk) - mu1 * mu1;
                const double v2 = s22.at(i, j, kk) - mu2 * mu2;
                const double cov = s12.at(i, j, kk) - mu1 * mu2;
                const double num = (2 * mu1 * mu2 + c1) * (2 * cov + c2);
                const double den = (mu1 * mu1 + mu2 * mu2 + c1) * (v1 + v2 + c2);
                acc += num / den;
                ++count;
            }
    return acc / count;
}

double psnr(const Volume& u, const Volume& u0, double dynamic_range) {
    if (!u.same_dims(u0)) throw std::invalid_argument("psnr: dimension mismatch");
    double dr = dynamic_range;
    if (dr <= 0) dr = u0.max() - u0.min();
    if (dr <= 0) dr = 1.0;
    Volume r = u - u0;
    const double mse = dot(r, r) / static_cast<double>(r.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(dr * dr / mse);
}

MetricReport evaluate(const Volume& u, const Volume& u0) {
    MetricReport r;
    r.l2_normalized = l2_error(u, u0);
    r.ssim = ssim3(u, u0);
    r.psnr = psnr(u, u0);
    return r;
}

}  // namespace lsdeconv
