#include "lsdeconv/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace lsdeconv {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

int next_fast_size(int n) {
    if (n < 1) throw std::invalid_argument("next_fast_size: n must be >= 1");
    for (int c = n;; ++c) {
        int r = c;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return c;
    }
}

FftBuffer::FftBuffer(size_t n) : n_(n) {
    ptr_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(cplx) * n));
    if (!ptr_) throw std::bad_alloc();
    zero();
}

FftBuffer::~FftBuffer() {
    if (ptr_) fftw_free(ptr_);
}

FftBuffer::FftBuffer(FftBuffer&& o) noexcept : ptr_(o.ptr_), n_(o.n_) {
    o.ptr_ = nullptr;
    o.n_ = 0;
}

FftBuffer& FftBuffer::operator=(FftBuffer&& o) noexcept {
    if (this != &o) {
        if (ptr_) fftw_free(ptr_);
        ptr_ = o.ptr_;
        n_ = o.n_;
        o.ptr_ = nullptr;
        o.n_ = 0;
    }
    return *this;
}

void FftBuffer::zero() {
    std::memset(ptr_, 0, sizeof(cplx) * n_);
}

struct Fft::Impl {
    fftw_plan fwd = nullptr, bwd = nullptr;
    size_t n = 0;
};

Fft::Fft(int nx, int ny) : impl_(std::make_unique<Impl>()) {
    impl_->n = static_cast<size_t>(nx) * ny;
    FftBuffer scratch(impl_->n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    // row-major (ny, nx): x fastest-varying
    impl_->fwd = fftw_plan_dft_2d(ny, nx, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_2d(ny, nx, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::Fft(int nx, int ny, int nz) : impl_(std::make_unique<Impl>()) {
    impl_->n = static_cast<size_t>(nx) * ny * nz;
    FftBuffer scratch(impl_->n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    impl_->fwd = fftw_plan_dft_3d(nz, ny, nx, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_3d(nz, ny, nx, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard lock(planner_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void Fft::forward(cplx* buf) const {
    auto* p = reinterpret_cast<fftw_complex*>(buf);
    fftw_execute_dft(impl_->fwd, p, p);
}

void Fft::backward(cplx* buf) const {
    auto* p = reinterpret_cast<fftw_complex*>(buf);
    fftw_execute_dft(impl_->bwd, p, p);
}

size_t Fft::size() const { return impl_->n; }

const Fft& fft2d(int nx, int ny) {
    static std::map<std::pair<int, int>, std::unique_ptr<Fft>> cache;
    static std::mutex m;
    std::lock_guard lock(m);
    auto& slot = cache[{nx, ny}];
    if (!slot) slot = std::unique_ptr<Fft>(new Fft(nx, ny));
    return *slot;
}

const Fft& fft3d(int nx, int ny, int nz) {
    static std::map<std::tuple<int, int, int>, std::unique_ptr<Fft>> cache;
    static std::mutex m;
    std::lock_guard lock(m);
    auto& slot = cache[{nx, ny, nz}];
    if (!slot) slot = std::unique_ptr<Fft>(new Fft(nx, ny, nz));
    return *slot;
}

}  // namespace lsdeconv
