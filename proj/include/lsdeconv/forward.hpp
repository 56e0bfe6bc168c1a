#pragma once

#include <memory>
#include <vector>

#include "lsdeconv/fft.hpp"
#include "lsdeconv/volume.hpp"

namespace lsdeconv {

enum class Boundary { Zero, Circular };

/// Abstract linear operator on volumes.
struct LinOp {
    virtual ~LinOp() = default;
    virtual Volume apply(const Volume& u) const = 0;
    virtual Volume adjoint(const Volume& f) const = 0;
};

struct OpNormEstimate {
    double value = 0.0;
    bool converged = false;
    int iters = 0;
};

/// Power iteration on A*A; returns sqrt of the largest eigenvalue.
/// Deterministic for a fixed seed.
OpNormEstimate estimate_op_norm(const LinOp& op, int nx, int ny, int nz,
                                int max_iters = 200, double tol = 1e-6,
                                uint64_t seed = 1);

/// Spatially varying light-sheet operator: per output plane k, the sample is
/// shifted in z, weighted by the sheet profile l and 2D-convolved plane by
/// plane with the matching z-slice of the detection PSF h, then summed.
/// Kernel origin is the grid centre; out-of-range reads are zero under the
/// Zero boundary policy.
class LightsheetOperator : public LinOp {
public:
    /// If normalize is true, C is chosen so the estimated operator norm is 1.
    LightsheetOperator(Volume l, Volume h, Boundary boundary = Boundary::Zero,
                       bool normalize = true);

    Volume apply(const Volume& u) const override;
    Volume adjoint(const Volume& f) const override;

    double normalization() const { return c_; }
    const Volume& sheet() const { return l_; }
    const Volume& kernel() const { return h_; }

private:
    Volume l_, h_;
    Boundary boundary_;
    double c_ = 1.0;
    int px_ = 0, py_ = 0;                 // padded plane dims
    std::vector<FftBuffer> h_hat_;        // per-z-slice kernel spectra
};

/// Plain 3D convolution with a fixed kernel (centred origin).
class ConvolutionOperator : public LinOp {
public:
    ConvolutionOperator(Volume kernel, Boundary boundary = Boundary::Zero,
                        double gain = 1.0);

    Volume apply(const Volume& u) const override;
    Volume adjoint(const Volume& f) const override;

    const Volume& kernel() const { return kernel_; }
    double gain() const { return gain_; }

private:
    Volume kernel_;
    Boundary boundary_;
    double gain_;
    int px_ = 0, py_ = 0, pz_ = 0;
    FftBuffer k_hat_;
};

}  // namespace lsdeconv
