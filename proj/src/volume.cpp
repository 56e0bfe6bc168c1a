#include "lsdeconv/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsdeconv {

namespace {
void check_dims(const Volume& a, const Volume& b, const char* op) {
    if (!a.same_dims(b))
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}
}  // namespace

bool Volume::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

Volume& Volume::operator+=(const Volume& o) {
    check_dims(*this, o, "operator+=");
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}

Volume& Volume::operator-=(const Volume& o) {
    check_dims(*this, o, "operator-=");
    for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
}

Volume& Volume::operator*=(double s) {
    for (double& x : data) x *= s;
    return *this;
}

Volume& Volume::axpy(double a, const Volume& x) {
    check_dims(*this, x, "axpy");
    for (size_t i = 0; i < data.size(); ++i) data[i] += a * x.data[i];
    return *this;
}

double Volume::min() const {
    return *std::min_element(data.begin(), data.end());
}

double Volume::max() const {
    return *std::max_element(data.begin(), data.end());
}

double Volume::sum() const {
    double s = 0.0;
    for (double x : data) s += x;
    return s;
}

Volume operator+(Volume a, const Volume& b) { a += b; return a; }
Volume operator-(Volume a, const Volume& b) { a -= b; return a; }
Volume operator*(double s, Volume a) { a *= s; return a; }

double dot(const Volume& a, const Volume& b) {
    check_dims(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double norm2(const Volume& v) { return std::sqrt(dot(v, v)); }

double norm1(const Volume& v) {
    double s = 0.0;
    for (double x : v.data) s += std::abs(x);
    return s;
}

double norm_inf(const Volume& v) {
    double s = 0.0;
    for (double x : v.data) s = std::max(s, std::abs(x));
    return s;
}

Image2D mip(const Volume& v, int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("mip: axis must be 0, 1 or 2");
    Image2D img;
    const double lo = -std::numeric_limits<double>::infinity();
    if (axis == 2) {  // project along z -> (ny x nx)
        img.rows = v.ny; img.cols = v.nx;
        img.data.assign(static_cast<size_t>(img.rows) * img.cols, lo);
        for (int k = 0; k < v.nz; ++k)
            for (int j = 0; j < v.ny; ++j)
                for (int i = 0; i < v.nx; ++i)
                    img.at(j, i) = std::max(img.at(j, i), v.at(i, j, k));
    } else if (axis == 1) {  // project along y -> (nz x nx)
        img.rows = v.nz; img.cols = v.nx;
        img.data.assign(static_cast<size_t>(img.rows) * img.cols, lo);
        for (int k = 0; k < v.nz; ++k)
            for (int j = 0; j < v.ny; ++j)
                for (int i = 0; i < v.nx; ++i)
                    img.at(k, i) = std::max(img.at(k, i), v.at(i, j, k));
    } else {  // project along x -> (nz x ny)
        img.rows = v.nz; img.cols = v.ny;
        img.data.assign(static_cast<size_t>(img.rows) * img.cols, lo);
        for (int k = 0; k < v.nz; ++k)
            for (int j = 0; j < v.ny; ++j)
                for (int i = 0; i < v.nx; ++i)
                    img.at(k, j) = std::max(img.at(k, j), v.at(i, j, k));
    }
    return img;
}

std::vector<uint8_t> to_u8(const Image2D& img) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : img.data) { lo = std::min(lo, x); hi = std::max(hi, x); }
    const double range = hi - lo;
    std::vector<uint8_t> out(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        double t = range > 0 ? (img.data[i] - lo) / range : 0.0;
        out[i] = static_cast<uint8_t>(std::lround(t * 255.0));
    }
    return out;
}

}  // namespace lsdeconv
