#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsdeconv {

/// Origin convention for the physical coordinate attached to index (0,0,0).
enum class Origin { Centered, Corner };

/// Dense 3D scalar field. Index convention is (i,j,k) = (x,y,z) with x
/// fastest-varying in memory, so each z-slice is a contiguous 2D image.
/// Samples are stored in double; the on-disk payload is float32.
struct Volume {
    int nx = 0, ny = 0, nz = 0;
    std::array<double, 3> pitch{1.0, 1.0, 1.0};  // (px_x, px_y, step_z) in um
    Origin origin = Origin::Centered;
    std::vector<double> data;

    Volume() = default;
    Volume(int nx_, int ny_, int nz_, double fill = 0.0,
           std::array<double, 3> pitch_ = {1.0, 1.0, 1.0},
           Origin origin_ = Origin::Centered)
        : nx(nx_), ny(ny_), nz(nz_), pitch(pitch_), origin(origin_),
          data(checked_size(nx_, ny_, nz_), fill) {}

    static size_t checked_size(int nx_, int ny_, int nz_) {
        if (nx_ < 1 || ny_ < 1 || nz_ < 1)
            throw std::invalid_argument("Volume: all dimensions must be >= 1");
        return static_cast<size_t>(nx_) * ny_ * nz_;
    }

    size_t size() const { return data.size(); }
    size_t idx(int i, int j, int k) const {
        return static_cast<size_t>(k) * ny * nx + static_cast<size_t>(j) * nx + i;
    }
    double& at(int i, int j, int k) { return data[idx(i, j, k)]; }
    double at(int i, int j, int k) const { return data[idx(i, j, k)]; }
    bool same_dims(const Volume& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz;
    }

    /// Grid centre indices (used as the kernel/sample origin).
    int cx() const { return nx / 2; }
    int cy() const { return ny / 2; }
    int cz() const { return nz / 2; }

    bool all_finite() const;

    Volume& operator+=(const Volume& o);
    Volume& operator-=(const Volume& o);
    Volume& operator*=(double s);
    Volume& axpy(double a, const Volume& x);  // *this += a*x

    double min() const;
    double max() const;
    double sum() const;  // double-precision accumulation
};

Volume operator+(Volume a, const Volume& b);
Volume operator-(Volume a, const Volume& b);
Volume operator*(double s, Volume a);

/// <a, b> with double accumulation. Throws on dimension mismatch.
double dot(const Volume& a, const Volume& b);

double norm2(const Volume& v);      // sqrt(dot(v,v))
double norm1(const Volume& v);
double norm_inf(const Volume& v);

/// Per-pixel maximum along one axis. axis: 0=x, 1=y, 2=z.
/// Returns row-major rows*cols image; for axis=z the result is ny rows of nx.
struct Image2D {
    int rows = 0, cols = 0;
    std::vector<double> data;
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

Image2D mip(const Volume& v, int axis);

/// Min-max normalize to 8-bit grayscale.
std::vector<uint8_t> to_u8(const Image2D& img);

}  // namespace lsdeconv
