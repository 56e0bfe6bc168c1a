#include "lsdeconv/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsdeconv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void FidelitySpec::validate() const {
    if (!(sigma_g > 0)) throw std::invalid_argument("FidelitySpec: sigma_g must be > 0");
    if (!(box_lo >= 0 && box_lo < box_hi))
        throw std::invalid_argument("FidelitySpec: require 0 <= l1 < l2");
}

double kl_div(const Volume& v, const Volume& u) {
    if (!v.same_dims(u)) throw std::invalid_argument("kl_div: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const double vi = v.data[i], ui = u.data[i];
        if (vi < 0 || ui < 0) throw std::invalid_argument("kl_div: negative input");
        if (vi == 0.0) {
            s += ui;
        } else {
            if (ui == 0.0) return kInf;
            s += ui - vi + vi * std::log(vi / ui);
        }
    }
    return s;
}

namespace {

// Root function of the interior stationarity system, strictly increasing in v.
inline double kl_root_fn(double v, double u_star, double v_star, double gamma) {
    const double t = (v - v_star) / gamma;
    return gamma - gamma * std::exp(-t) + v * std::exp(t) - u_star;
}

}  // namespace

KlProxResult prox_kl_scalar(double u_star, double v_star, double gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("prox_kl_scalar: gamma must be > 0");
    KlProxResult r;

    // Limit of the root function as v -> 0+. If non-negative there is no
    // positive root and the minimizer sits at the corner (0,0).
    const double e0 = v_star / gamma;
    const double g0 = (e0 > 700) ? -kInf : gamma - gamma * std::exp(e0) - u_star;
    if (g0 >= 0.0) {
        r.u = r.v = 0.0;
        r.interior = false;
        r.residual = 0.0;
        return r;
    }

    auto g = [&](double v) { return kl_root_fn(v, u_star, v_star, gamma); };

    // bracket [lo, hi] with g(lo) < 0 <= g(hi)
    double lo = 0.0;
    double hi = std::max({v_star, gamma, 1.0});
    for (int it = 0; it < 600 && !(g(hi) > 0); ++it) hi *= 2.0;

    const double tol = 1e-13 * std::max(1.0, std::abs(u_star));
    double v = std::clamp(std::max(v_star, gamma * 1e-6), lo, hi);
    double gv = g(v);
    int newton = 0, bisect = 0;
    while (std::abs(gv) > tol && (newton < 50 || bisect < 200)) {
        if (gv > 0) hi = v; else lo = v;
        double vn = v;
        bool stepped = false;
        if (newton < 50) {
            const double t = (v - v_star) / gamma;
            const double gp = std::exp(-t) + (1.0 + v / gamma) * std::exp(t);
            vn = v - gv / gp;
            ++newton;
            stepped = std::isfinite(vn) && vn > lo && vn < hi;
        }
        if (!stepped) {
            vn = 0.5 * (lo + hi);
            ++bisect;
            if (vn == lo || vn == hi) break;  // bracket exhausted at machine precision
        }
        v = vn;
        gv = g(v);
    }

    r.v = v;
    r.u = v * std::exp((v - v_star) / gamma);
    r.interior = true;
    r.residual = std::abs(gv) / gamma;
    return r;
}

std::pair<Volume, Volume> prox_kl_joint(const Volume& u_star, const Volume& v_star,
                                        double gamma) {
    if (!u_star.same_dims(v_star))
        throw std::invalid_argument("prox_kl_joint: dimension mismatch");
    Volume u(u_star.nx, u_star.ny, u_star.nz, 0.0, u_star.pitch, u_star.origin);
    Volume v = u;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(u.size()); ++i) {
        auto r = prox_kl_scalar(u_star.data[i], v_star.data[i], gamma);
        u.data[i] = r.u;
        v.data[i] = r.v;
    }
    return {std::move(u), std::move(v)};
}

double conj_kl_scalar(double u_star, double v_star, double l1, double l2) {
    if (!(l1 > 0 && l1 < l2))
        throw std::invalid_argument("conj_kl_scalar: require 0 < l1 < l2");

    auto psi = [&](double v, double u) {
        return u * u_star + v * v_star - u + v - v * std::log(v / u);
    };
    double best = -kInf;
    auto consider = [&](double v, double u) {
        if (v >= l1 && v <= l2 && u >= l1 && u <= l2) best = std::max(best, psi(v, u));
    };

    // corners
    consider(l1, l1); consider(l1, l2); consider(l2, l1); consider(l2, l2);

    // u fixed on a bound, v interior: v = u * e^{v*}
    const double ev = (v_star < 700) ? std::exp(v_star) : kInf;
    if (std::isfinite(ev)) {
        consider(l1 * ev, l1);
        consider(l2 * ev, l2);
    }
    // v fixed on a bound, u interior: u = v / (1 - u*)
    if (u_star < 1.0) {
        consider(l1, l1 / (1.0 - u_star));
        consider(l2, l2 / (1.0 - u_star));
    }
    // degenerate interior case: e^{v*} = 1 - u*, Psi = 0 along the line
    if (std::isfinite(ev) && u_star < 1.0 &&
        std::abs(ev - (1.0 - u_star)) <= 1e-12 * (ev + (1.0 - u_star))) {
        if (l1 * ev <= l2 && l2 * ev >= l1) best = std::max(best, 0.0);
    }
    return best;
}

double conj_kl_joint(const Volume& u_star, const Volume& v_star, double l1, double l2) {
    if (!u_star.same_dims(v_star))
        throw std::invalid_argument("conj_kl_joint: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < u_star.size(); ++i)
        s += conj_kl_scalar(u_star.data[i], v_star.data[i], l1, l2);
    return s;
}

Volume prox_l2(const Volume& v_star, const Volume& f, double sigma_g, double tau) {
    if (!v_star.same_dims(f)) throw std::invalid_argument("prox_l2: dimension mismatch");
    if (!(sigma_g > 0 && tau > 0))
        throw std::invalid_argument("prox_l2: sigma_g and tau must be > 0");
    const double s2 = sigma_g * sigma_g;
    Volume out = v_star;
    for (size_t i = 0; i < out.size(); ++i)
        out.data[i] = (s2 * v_star.data[i] + tau * f.data[i]) / (s2 + tau);
    return out;
}

std::array<Volume, 3> grad3(const Volume& u) {
    Volume gx(u.nx, u.ny, u.nz, 0.0, u.pitch, u.origin);
    Volume gy = gx, gz = gx;
    for (int k = 0; k < u.nz; ++k)
        for (int j = 0; j < u.ny; ++j)
            for (int i = 0; i < u.nx; ++i) {
                if (i + 1 < u.nx) gx.at(i, j, k) = u.at(i + 1, j, k) - u.at(i, j, k);
                if (j + 1 < u.ny) gy.at(i, j, k) = u.at(i, j + 1, k) - u.at(i, j, k);
                if (k + 1 < u.nz) gz.at(i, j, k) = u.at(i, j, k + 1) - u.at(i, j, k);
            }
    return {std::move(gx), std::move(gy), std::move(gz)};
}

Volume div3(const std::array<Volume, 3>& p) {
    const Volume& px = p[0];
    if (!px.same_dims(p[1]) || !px.same_dims(p[2]))
        throw std::invalid_argument("div3: dimension mismatch");
    Volume d(px.nx, px.ny, px.nz, 0.0, px.pitch, px.origin);
    for (int k = 0; k < px.nz; ++k)
        for (int j = 0; j < px.ny; ++j)
            for (int i = 0; i < px.nx; ++i) {
                double s = 0.0;
                if (i + 1 < px.nx) s += px.at(i, j, k);
                if (i > 0) s -= px.at(i - 1, j, k);
                if (j + 1 < px.ny) s += p[1].at(i, j, k);
                if (j > 0) s -= p[1].at(i, j - 1, k);
                if (k + 1 < px.nz) s += p[2].at(i, j, k);
                if (k > 0) s -= p[2].at(i, j, k - 1);
                d.at(i, j, k) = s;
            }
    return d;
}

std::array<Volume, 3> prox_conj_l1(std::array<Volume, 3> y, double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("prox_conj_l1: alpha must be > 0");
    for (auto& v : y)
        for (double& x : v.data) x = std::clamp(x, -alpha, alpha);
    return y;
}

std::array<Volume, 3> prox_conj_l1_iso(std::array<Volume, 3> y, double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("prox_conj_l1_iso: alpha must be > 0");
    for (size_t i = 0; i < y[0].size(); ++i) {
        double m = std::sqrt(y[0].data[i] * y[0].data[i] + y[1].data[i] * y[1].data[i] +
                             y[2].data[i] * y[2].data[i]);
        if (m > alpha) {
            double s = alpha / m;
            y[0].data[i] *= s; y[1].data[i] *= s; y[2].data[i] *= s;
        }
    }
    return y;
}

std::array<Volume, 3> prox_l1(std::array<Volume, 3> y, double alpha) {
    for (auto& v : y)
        for (double& x : v.data)
            x = (x > alpha) ? x - alpha : (x < -alpha ? x + alpha : 0.0);
    return y;
}

Volume project_box(Volume w, double l1, double l2) {
    if (!(l1 < l2)) throw std::invalid_argument("project_box: require l1 < l2");
    for (double& x : w.data) x = std::clamp(x, l1, l2);
    return w;
}

std::pair<Volume, Volume> project_box(std::pair<Volume, Volume> w, double l1, double l2) {
    w.first = project_box(std::move(w.first), l1, l2);
    w.second = project_box(std::move(w.second), l1, l2);
    return w;
}

double conj_box(const Volume& y, double l1, double l2) {
    if (!(l1 < l2)) throw std::invalid_argument("conj_box: require l1 < l2");
    double s = 0.0;
    for (double x : y.data) s += std::max(l1 * x, l2 * x);
    return s;
}

}  // namespace lsdeconv
