#include "lsdeconv/optics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "lsdeconv/fft.hpp"
#include "lsdeconv/forward.hpp"

namespace lsdeconv {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

double fftfreq(int m, int n, double pitch) {
    int f = (m < (n + 1) / 2) ? m : m - n;
    return static_cast<double>(f) / (n * pitch);
}
}  // namespace

void OpticalConfig::validate() const {
    if (!(n > 0)) throw std::invalid_argument("OpticalConfig: n must be positive");
    if (!(na_h > 0 && na_h <= n) || !(na_l > 0 && na_l <= n))
        throw std::invalid_argument("OpticalConfig: require 0 < NA <= n");
    if (!(lambda_h > 0 && lambda_l > 0))
        throw std::invalid_argument("OpticalConfig: wavelengths must be positive");
    if (!(px_x > 0 && px_y > 0 && step_z > 0))
        throw std::invalid_argument("OpticalConfig: pitches must be positive");
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::invalid_argument("OpticalConfig: dims must be >= 1");
}

void ZernikeCoeffs::validate() const {
    for (double x : c)
        if (!(x >= -3.0 && x <= 3.0))
            throw std::invalid_argument("ZernikeCoeffs: coefficients must lie in [-3,3]");
}

double zernike_eval(int j, double rho, double theta) {
    const double r2 = rho * rho;
    switch (j) {
        case 1: return rho * std::cos(theta);
        case 2: return rho * std::sin(theta);
        case 3: return 2 * r2 - 1;
        case 4: return r2 * std::cos(2 * theta);
        case 5: return r2 * std::sin(2 * theta);
        case 6: return (3 * r2 - 2) * rho * std::cos(theta);
        case 7: return (3 * r2 - 2) * rho * std::sin(theta);
        case 8: return 6 * r2 * r2 - 6 * r2 + 1;
        case 9: return r2 * rho * std::cos(3 * theta);
        case 10: return r2 * rho * std::sin(3 * theta);
        case 11: return (4 * r2 - 3) * r2 * std::cos(2 * theta);
        case 12: return (4 * r2 - 3) * r2 * std::sin(2 * theta);
        case 13: return (10 * r2 * r2 - 12 * r2 + 3) * rho * std::cos(theta);
        case 14: return (10 * r2 * r2 - 12 * r2 + 3) * rho * std::sin(theta);
        case 15: return 20 * r2 * r2 * r2 - 30 * r2 * r2 + 12 * r2 - 1;
        default: throw std::out_of_range("zernike_eval: j must be in 1..15");
    }
}

std::complex<double> pupil(double kx, double ky, const ZernikeCoeffs& coeffs,
                           double na, double lambda) {
    const double r = std::hypot(kx, ky);
    const double rim = na / lambda;
    if (r > rim) return {0.0, 0.0};
    double phase = 0.0;
    const double rho = r / rim;  // aperture rim maps to rho = 1
    const double theta = std::atan2(ky, kx);
    for (int j = 1; j <= 15; ++j)
        if (coeffs.c[j - 1] != 0.0) phase += coeffs.c[j - 1] * zernike_eval(j, rho, theta);
    return std::polar(1.0, two_pi * phase);
}

Volume defocus_psf(const std::vector<std::complex<double>>& pupil_grid,
                   int nx, int ny, int nz,
                   double px_x, double px_y, double step_z,
                   double lambda, double n) {
    if (pupil_grid.size() != static_cast<size_t>(nx) * ny)
        throw std::invalid_argument("defocus_psf: pupil grid size mismatch");
    const Fft& fft = fft2d(nx, ny);
    const int cx = nx / 2, cy = ny / 2, cz = nz / 2;
    const double n_over_lambda2 = (n / lambda) * (n / lambda);
    Volume out(nx, ny, nz, 0.0, {px_x, px_y, step_z});

#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nz; ++k) {
        const double z = (k - cz) * step_z;
        FftBuffer buf(fft.size());
        for (int mj = 0; mj < ny; ++mj) {
            const double ky = fftfreq(mj, ny, px_y);
            for (int mi = 0; mi < nx; ++mi) {
                const double kx = fftfreq(mi, nx, px_x);
                const double arg = n_over_lambda2 - kx * kx - ky * ky;
                cplx val = 0.0;
                if (arg >= 0.0) {  // evanescent components dropped
                    val = pupil_grid[static_cast<size_t>(mj) * nx + mi] *
                          std::polar(1.0, two_pi * z * std::sqrt(arg));
                }
                buf.data()[static_cast<size_t>(mj) * nx + mi] = val;
            }
        }
        fft.backward(buf.data());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                int ii = ((i - cx) % nx + nx) % nx;
                int jj = ((j - cy) % ny + ny) % ny;
                out.at(i, j, k) = std::norm(buf.data()[static_cast<size_t>(jj) * nx + ii]);
            }
    }
    return out;
}

Volume gaussian_blur3(const Volume& v, double sigma) {
    if (sigma < 0) throw std::invalid_argument("gaussian_blur3: sigma must be >= 0");
    if (sigma == 0.0) return v;
    const int half = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> ker(2 * half + 1);
    double s = 0.0;
    for (int t = -half; t <= half; ++t)
        s += ker[t + half] = std::exp(-0.5 * (t / sigma) * (t / sigma));
    for (double& x : ker) x /= s;

    auto pass = [&](const Volume& in, int axis) {
        Volume out(in.nx, in.ny, in.nz, 0.0, in.pitch, in.origin);
        const int dims[3] = {in.nx, in.ny, in.nz};
        for (int k = 0; k < in.nz; ++k)
            for (int j = 0; j < in.ny; ++j)
                for (int i = 0; i < in.nx; ++i) {
                    double acc = 0.0;
                    for (int t = -half; t <= half; ++t) {
                        int p[3] = {i, j, k};
                        p[axis] += t;
                        if (p[axis] < 0 || p[axis] >= dims[axis]) continue;
                        acc += ker[t + half] * in.at(p[0], p[1], p[2]);
                    }
                    out.at(i, j, k) = acc;
                }
        return out;
    };
    return pass(pass(pass(v, 0), 1), 2);
}

Volume detection_psf(const OpticalConfig& cfg, const ZernikeCoeffs& coeffs,
                     double sigma_blur) {
    cfg.validate();
    coeffs.validate();
    if (sigma_blur < 0) throw std::invalid_argument("detection_psf: sigma_blur >= 0");
    std::vector<cplx> grid(static_cast<size_t>(cfg.nx) * cfg.ny);
    for (int mj = 0; mj < cfg.ny; ++mj)
        for (int mi = 0; mi < cfg.nx; ++mi)
            grid[static_cast<size_t>(mj) * cfg.nx + mi] =
                pupil(fftfreq(mi, cfg.nx, cfg.px_x), fftfreq(mj, cfg.ny, cfg.px_y),
                      coeffs, cfg.na_h, cfg.lambda_h);
    Volume h = defocus_psf(grid, cfg.nx, cfg.ny, cfg.nz, cfg.px_x, cfg.px_y,
                           cfg.step_z, cfg.lambda_h, cfg.n);
    h = gaussian_blur3(h, sigma_blur);
    double s = h.sum();
    if (!(s > 0)) throw std::runtime_error("detection_psf: degenerate PSF");
    h *= 1.0 / s;
    return h;
}

Volume lightsheet_profile(const OpticalConfig& cfg) {
    cfg.validate();
    const int nx = cfg.nx, ny = cfg.ny, nz = cfg.nz;
    const int cx = nx / 2, cy = ny / 2, cz = nz / 2;
    // transverse plane is (z, y); z fastest-varying in the FFT layout
    const Fft& fft = fft2d(nz, ny);
    const double nl2 = (cfg.n / cfg.lambda_l) * (cfg.n / cfg.lambda_l);
    const double rim2 = (cfg.na_l / cfg.lambda_l) * (cfg.na_l / cfg.lambda_l);
    Volume l(nx, ny, nz, 0.0, cfg.pitch());

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nx; ++i) {
        const double x = (i - cx) * cfg.px_x - cfg.sheet_x0;
        FftBuffer buf(fft.size());
        for (int mj = 0; mj < ny; ++mj) {
            const double ky = fftfreq(mj, ny, cfg.px_y);
            for (int mk = 0; mk < nz; ++mk) {
                const double kz = fftfreq(mk, nz, cfg.step_z);
                const double r2 = kz * kz + ky * ky;
                cplx val = 0.0;
                if (r2 <= rim2 && nl2 - r2 >= 0.0)
                    val = std::polar(1.0, two_pi * x * std::sqrt(nl2 - r2));
                buf.data()[static_cast<size_t>(mj) * nz + mk] = val;
            }
        }
        fft.backward(buf.data());
        for (int k = 0; k < nz; ++k) {
            int kk = ((k - cz) % nz + nz) % nz;
            double avg = 0.0;
            for (int j = 0; j < ny; ++j) {
                int jj = ((j - cy) % ny + ny) % ny;
                avg += std::norm(buf.data()[static_cast<size_t>(jj) * nz + kk]);
            }
            avg /= ny;
            for (int j = 0; j < ny; ++j) l.at(i, j, k) = avg;
        }
    }
    double m = l.max();
    if (m > 0) l *= 1.0 / m;
    return l;
}

Volume rasterize_sphere(int nx, int ny, int nz, std::array<double, 3> pitch,
                        double radius_um) {
    if (!(radius_um > 0)) throw std::invalid_argument("rasterize_sphere: radius > 0");
    Volume b(nx, ny, nz, 0.0, pitch);
    const int cx = nx / 2, cy = ny / 2, cz = nz / 2;
    const double r2 = radius_um * radius_um;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double dx = (i - cx) * pitch[0], dy = (j - cy) * pitch[1],
                       dz = (k - cz) * pitch[2];
                if (dx * dx + dy * dy + dz * dz <= r2) b.at(i, j, k) = 1.0;
            }
    return b;
}

namespace {

// Objective for the bead fit: max-normalized squared error with closed-form
// intensity shift. Parameter vector: c[0..14], sigma, scale.
struct FitObjective {
    const Volume& bead;
    const OpticalConfig& cfg;
    Volume sphere;
    double bead_max;
    mutable double best_shift = 0.0;

    static std::vector<double> project(std::vector<double> p) {
        for (int j = 0; j < 15; ++j) p[j] = std::clamp(p[j], -3.0, 3.0);
        p[15] = std::max(p[15], 1e-3);  // sigma > 0
        return p;
    }

    double operator()(const std::vector<double>& raw) const {
        auto p = project(raw);
        ZernikeCoeffs c;
        std::copy_n(p.begin(), 15, c.c.begin());
        Volume h = detection_psf(cfg, c, p[15]);
        ConvolutionOperator conv(h);
        Volume model = conv.apply(sphere);
        double mmax = model.max();
        if (!(mmax > 0)) return 1e300;
        const double scale = p[16];
        // shift* = mean(d/dmax - scale*m/mmax)
        double shift = 0.0;
        for (size_t t = 0; t < model.size(); ++t)
            shift += bead.data[t] / bead_max - scale * model.data[t] / mmax;
        shift /= static_cast<double>(model.size());
        best_shift = shift;
        double err = 0.0;
        for (size_t t = 0; t < model.size(); ++t) {
            double r = scale * model.data[t] / mmax + shift - bead.data[t] / bead_max;
            err += r * r;
        }
        return err;
    }
};

// Nelder-Mead with projection onto the parameter box.
std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, const std::vector<double>& step,
    int max_evals, double tol) {
    const size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fx(n + 1);
    for (size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
    int evals = 0;
    for (size_t i = 0; i <= n; ++i) { fx[i] = f(simplex[i]); ++evals; }

    auto order = [&] {
        std::vector<size_t> idx(n + 1);
        for (size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fx[a] < fx[b]; });
        std::vector<std::vector<double>> s2(n + 1);
        std::vector<double> f2(n + 1);
        for (size_t i = 0; i <= n; ++i) { s2[i] = simplex[idx[i]]; f2[i] = fx[idx[i]]; }
        simplex = std::move(s2);
        fx = std::move(f2);
    };

    while (evals < max_evals) {
        order();
        if (fx[n] - fx[0] <= tol * (std::abs(fx[0]) + tol)) break;
        std::vector<double> centroid(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + t * (centroid[j] - simplex[n][j]);
            return p;
        };
        auto xr = blend(1.0);
        double fr = f(xr); ++evals;
        if (fr < fx[0]) {
            auto xe = blend(2.0);
            double fe = f(xe); ++evals;
            if (fe < fr) { simplex[n] = xe; fx[n] = fe; }
            else { simplex[n] = xr; fx[n] = fr; }
        } else if (fr < fx[n - 1]) {
            simplex[n] = xr; fx[n] = fr;
        } else {
            auto xc = blend(fr < fx[n] ? 0.5 : -0.5);
            double fc = f(xc); ++evals;
            if (fc < std::min(fr, fx[n])) { simplex[n] = xc; fx[n] = fc; }
            else {  // shrink toward the best vertex
                for (size_t i = 1; i <= n; ++i) {
                    for (size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fx[i] = f(simplex[i]); ++evals;
                }
            }
        }
    }
    order();
    return {simplex[0], fx[0]};
}

}  // namespace

PsfFitResult fit_psf(const Volume& bead, double bead_radius_um,
                     const OpticalConfig& cfg, const PsfFitResult& init,
                     const PsfFitOptions& opts) {
    cfg.validate();
    if (bead.nx != cfg.nx || bead.ny != cfg.ny || bead.nz != cfg.nz)
        throw std::invalid_argument("fit_psf: bead dims do not match config");
    if (!bead.all_finite()) throw std::invalid_argument("fit_psf: non-finite bead data");
    double bmax = bead.max();
    if (!(bmax > 0)) throw std::invalid_argument("fit_psf: bead image is non-positive");

    FitObjective obj{bead, cfg,
                     rasterize_sphere(cfg.nx, cfg.ny, cfg.nz, cfg.pitch(), bead_radius_um),
                     bmax};

    std::vector<double> p0(17);
    std::copy_n(init.coeffs.c.begin(), 15, p0.begin());
    p0[15] = init.sigma;
    p0[16] = init.scale;
    const double f_init = obj(p0);

    std::vector<double> step(17, 0.1);
    step[15] = 0.25;
    step[16] = 0.1;

    auto fn = [&](const std::vector<double>& p) { return obj(p); };
    auto best = std::make_pair(p0, f_init);
    int budget = std::max(opts.max_evals / std::max(opts.restarts, 1), 50);
    for (int r = 0; r < std::max(opts.restarts, 1); ++r) {
        auto [px, fxv] = nelder_mead(fn, best.first, step, budget, opts.tol);
        if (fxv < best.second) best = {FitObjective::project(px), fxv};
        for (double& s : step) s *= 0.3;
    }

    PsfFitResult out;
    std::copy_n(best.first.begin(), 15, out.coeffs.c.begin());
    out.sigma = best.first[15];
    out.scale = best.first[16];
    out.residual = best.second;
    obj(best.first);  // recompute to recover the matching shift
    out.shift = obj.best_shift;
    out.converged = best.second <= f_init;
    return out;
}

}  // namespace lsdeconv
