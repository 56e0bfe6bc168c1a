#include "lsdeconv/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace lsdeconv {

namespace {

// SplitMix64, used for the deterministic power-iteration start vector.
uint64_t splitmix64(uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void pad_plane(const Volume& v, int k, FftBuffer& buf, int px, int py) {
    buf.zero();
    for (int j = 0; j < v.ny; ++j)
        for (int i = 0; i < v.nx; ++i)
            buf.data()[static_cast<size_t>(j) * px + i] = v.at(i, j, k);
}

void pad_plane_product(const Volume& a, int ka, const Volume& b, int kb,
                       FftBuffer& buf, int px, int py) {
    buf.zero();
    for (int j = 0; j < a.ny; ++j)
        for (int i = 0; i < a.nx; ++i)
            buf.data()[static_cast<size_t>(j) * px + i] = a.at(i, j, ka) * b.at(i, j, kb);
}

inline int wrap(int i, int p) { return i >= 0 ? (i < p ? i : i - p) : i + p; }

}  // namespace

OpNormEstimate estimate_op_norm(const LinOp& op, int nx, int ny, int nz,
                                int max_iters, double tol, uint64_t seed) {
    Volume x(nx, ny, nz);
    uint64_t s = seed;
    for (double& v : x.data)
        v = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 - 0.5;
    double nx0 = norm2(x);
    if (nx0 > 0) x *= 1.0 / nx0;
    double lambda = 0.0;
    OpNormEstimate est;
    for (int it = 0; it < max_iters; ++it) {
        Volume y = op.adjoint(op.apply(x));
        double ny2 = norm2(y);
        if (ny2 == 0.0) return {0.0, true, it + 1};
        double lambda_new = dot(x, y);  // Rayleigh quotient, ||x|| = 1
        y *= 1.0 / ny2;
        x = std::move(y);
        est.iters = it + 1;
        if (it > 0 && std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new)) {
            est.value = std::sqrt(std::abs(lambda_new));
            est.converged = true;
            return est;
        }
        lambda = lambda_new;
    }
    est.value = std::sqrt(std::abs(lambda));
    est.converged = false;
    return est;
}

LightsheetOperator::LightsheetOperator(Volume l, Volume h, Boundary boundary,
                                       bool normalize)
    : l_(std::move(l)), h_(std::move(h)), boundary_(boundary) {
    if (!l_.same_dims(h_))
        throw std::invalid_argument("LightsheetOperator: l and h dims differ");
    if (boundary_ == Boundary::Zero) {
        px_ = next_fast_size(2 * l_.nx - 1);
        py_ = next_fast_size(2 * l_.ny - 1);
    } else {
        px_ = l_.nx;
        py_ = l_.ny;
    }
    const Fft& fft = fft2d(px_, py_);
    h_hat_.reserve(l_.nz);
    for (int w = 0; w < l_.nz; ++w) {
        FftBuffer buf(fft.size());
        pad_plane(h_, w, buf, px_, py_);
        fft.forward(buf.data());
        h_hat_.push_back(std::move(buf));
    }
    if (normalize) {
        c_ = 1.0;
        auto est = estimate_op_norm(*this, l_.nx, l_.ny, l_.nz, 500, 1e-7);
        if (est.value <= 0)
            throw std::runtime_error("LightsheetOperator: operator is zero, cannot normalize");
        c_ = est.value;
    }
}

Volume LightsheetOperator::apply(const Volume& u) const {
    if (!u.same_dims(l_)) throw std::invalid_argument("apply_L: dimension mismatch");
    const int nx = u.nx, ny = u.ny, nz = u.nz;
    const int cx = u.cx(), cy = u.cy(), cz = u.cz();
    const Fft& fft = fft2d(px_, py_);
    const double inv = 1.0 / (static_cast<double>(px_) * py_ * c_);
    Volume f(nx, ny, nz, 0.0, u.pitch, u.origin);

#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nz; ++k) {
        FftBuffer acc(fft.size()), buf(fft.size());
        bool any = false;
        for (int w = 0; w < nz; ++w) {
            int d = w - k + cz;
            if (boundary_ == Boundary::Circular) d = ((d % nz) + nz) % nz;
            if (d < 0 || d >= nz) continue;
            pad_plane_product(l_, w, u, d, buf, px_, py_);
            fft.forward(buf.data());
            const cplx* hw = h_hat_[w].data();
            cplx* a = acc.data();
            const cplx* b = buf.data();
            for (size_t n = 0; n < fft.size(); ++n) a[n] += b[n] * hw[n];
            any = true;
        }
        if (!any) continue;
        fft.backward(acc.data());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                int ii = wrap(i + cx, px_), jj = wrap(j + cy, py_);
                f.at(i, j, k) =
                    acc.data()[static_cast<size_t>(jj) * px_ + ii].real() * inv;
            }
    }
    return f;
}

Volume LightsheetOperator::adjoint(const Volume& f) const {
    if (!f.same_dims(l_)) throw std::invalid_argument("adjoint_L: dimension mismatch");
    const int nx = f.nx, ny = f.ny, nz = f.nz;
    const int cx = f.cx(), cy = f.cy(), cz = f.cz();
    const Fft& fft = fft2d(px_, py_);
    const double inv = 1.0 / (static_cast<double>(px_) * py_ * c_);

    std::vector<FftBuffer> f_hat;
    f_hat.reserve(nz);
    for (int k = 0; k < nz; ++k) {
        FftBuffer buf(fft.size());
        pad_plane(f, k, buf, px_, py_);
        fft.forward(buf.data());
        f_hat.push_back(std::move(buf));
    }

    Volume out(nx, ny, nz, 0.0, f.pitch, f.origin);
#pragma omp parallel for schedule(dynamic)
    for (int m = 0; m < nz; ++m) {
        FftBuffer buf(fft.size());
        for (int w = 0; w < nz; ++w) {
            int k = w - m + cz;
            if (boundary_ == Boundary::Circular) k = ((k % nz) + nz) % nz;
            if (k < 0 || k >= nz) continue;
            const cplx* fk = f_hat[k].data();
            const cplx* hw = h_hat_[w].data();
            cplx* b = buf.data();
            for (size_t n = 0; n < fft.size(); ++n) b[n] = fk[n] * std::conj(hw[n]);
            fft.backward(buf.data());
            for (int jb = 0; jb < ny; ++jb)
                for (int ia = 0; ia < nx; ++ia) {
                    int ii = wrap(ia - cx, px_), jj = wrap(jb - cy, py_);
                    out.at(ia, jb, m) +=
                        l_.at(ia, jb, w) *
                        buf.data()[static_cast<size_t>(jj) * px_ + ii].real() * inv;
                }
        }
    }
    return out;
}

ConvolutionOperator::ConvolutionOperator(Volume kernel, Boundary boundary, double gain)
    : kernel_(std::move(kernel)), boundary_(boundary), gain_(gain), k_hat_(1) {
    if (boundary_ == Boundary::Zero) {
        px_ = next_fast_size(2 * kernel_.nx - 1);
        py_ = next_fast_size(2 * kernel_.ny - 1);
        pz_ = next_fast_size(2 * kernel_.nz - 1);
    } else {
        px_ = kernel_.nx;
        py_ = kernel_.ny;
        pz_ = kernel_.nz;
    }
    const Fft& fft = fft3d(px_, py_, pz_);
    FftBuffer buf(fft.size());
    for (int k = 0; k < kernel_.nz; ++k)
        for (int j = 0; j < kernel_.ny; ++j)
            for (int i = 0; i < kernel_.nx; ++i)
                buf.data()[(static_cast<size_t>(k) * py_ + j) * px_ + i] =
                    kernel_.at(i, j, k);
    fft.forward(buf.data());
    k_hat_ = std::move(buf);
}

Volume ConvolutionOperator::apply(const Volume& u) const {
    if (!u.same_dims(kernel_)) throw std::invalid_argument("apply_H: dimension mismatch");
    const int cx = u.cx(), cy = u.cy(), cz = u.cz();
    const Fft& fft = fft3d(px_, py_, pz_);
    FftBuffer buf(fft.size());
    for (int k = 0; k < u.nz; ++k)
        for (int j = 0; j < u.ny; ++j)
            for (int i = 0; i < u.nx; ++i)
                buf.data()[(static_cast<size_t>(k) * py_ + j) * px_ + i] = u.at(i, j, k);
    fft.forward(buf.data());
    for (size_t n = 0; n < fft.size(); ++n) buf.data()[n] *= k_hat_.data()[n];
    fft.backward(buf.data());
    const double inv = gain_ / (static_cast<double>(px_) * py_ * pz_);
    Volume f(u.nx, u.ny, u.nz, 0.0, u.pitch, u.origin);
    for (int k = 0; k < u.nz; ++k)
        for (int j = 0; j < u.ny; ++j)
            for (int i = 0; i < u.nx; ++i) {
                int ii = wrap(i + cx, px_), jj = wrap(j + cy, py_), kk = wrap(k + cz, pz_);
                f.at(i, j, k) =
                    buf.data()[(static_cast<size_t>(kk) * py_ + jj) * px_ + ii].real() * inv;
            }
    return f;
}

Volume ConvolutionOperator::adjoint(const Volume& f) const {
    if (!f.same_dims(kernel_)) throw std::invalid_argument("adjoint_H: dimension mismatch");
    const int cx = f.cx(), cy = f.cy(), cz = f.cz();
    const Fft& fft = fft3d(px_, py_, pz_);
    FftBuffer buf(fft.size());
    for (int k = 0; k < f.nz; ++k)
        for (int j = 0; j < f.ny; ++j)
            for (int i = 0; i < f.nx; ++i)
                buf.data()[(static_cast<size_t>(k) * py_ + j) * px_ + i] = f.at(i, j, k);
    fft.forward(buf.data());
    for (size_t n = 0; n < fft.size(); ++n)
        buf.data()[n] *= std::conj(k_hat_.data()[n]);
    fft.backward(buf.data());
    const double inv = gain_ / (static_cast<double>(px_) * py_ * pz_);
    Volume out(f.nx, f.ny, f.nz, 0.0, f.pitch, f.origin);
    for (int k = 0; k < f.nz; ++k)
        for (int j = 0; j < f.ny; ++j)
            for (int i = 0; i < f.nx; ++i) {
                int ii = wrap(i - cx, px_), jj = wrap(j - cy, py_), kk = wrap(k - cz, pz_);
                out.at(i, j, k) =
                    buf.data()[(static_cast<size_t>(kk) * py_ + jj) * px_ + ii].real() * inv;
            }
    return out;
}

}  // namespace lsdeconv
