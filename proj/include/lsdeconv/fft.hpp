#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace lsdeconv {

using cplx = std::complex<double>;

/// Smallest n' >= n whose prime factors are all in {2,3,5}.
int next_fast_size(int n);

/// FFTW-aligned complex buffer.
class FftBuffer {
public:
    explicit FftBuffer(size_t n);
    ~FftBuffer();
    FftBuffer(FftBuffer&&) noexcept;
    FftBuffer& operator=(FftBuffer&&) noexcept;
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;

    cplx* data() { return ptr_; }
    const cplx* data() const { return ptr_; }
    size_t size() const { return n_; }
    void zero();

private:
    cplx* ptr_ = nullptr;
    size_t n_ = 0;
};

/// In-place complex 2D/3D FFT of a fixed size. Plans are created once at
/// construction (creation is serialized internally); execution on
/// FftBuffer-backed arrays is reentrant.
class Fft {
public:
    Fft(int nx, int ny);           // 2D, x fastest-varying
    Fft(int nx, int ny, int nz);   // 3D
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(cplx* buf) const;
    void backward(cplx* buf) const;  // unnormalized inverse
    size_t size() const;             // total element count

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Process-wide plan cache keyed by dims; safe for concurrent lookup.
const Fft& fft2d(int nx, int ny);
const Fft& fft3d(int nx, int ny, int nz);

}  // namespace lsdeconv
