#include "lsdeconv/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsdeconv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKlFloor = 1e-12;  // clamp for FFT-noisy operator outputs

double kl_clamped(const Volume& v, const Volume& u) {
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const double vi = std::max(v.data[i], 0.0);
        const double ui = std::max(u.data[i], kKlFloor);
        s += ui - vi;
        if (vi > 0) s += vi * std::log(vi / ui);
    }
    return s;
}

uint64_t splitmix64(uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Volume random_volume(int nx, int ny, int nz, uint64_t seed) {
    Volume v(nx, ny, nz);
    uint64_t s = seed;
    for (double& x : v.data)
        x = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 - 0.5;
    return v;
}

void check_finite(const Volume& v, const char* what) {
    if (!v.all_finite())
        throw std::runtime_error(std::string("pdhg_run: non-finite iterate in ") + what);
}

}  // namespace

bool variant_is_ic(MethodVariant v) {
    return v == MethodVariant::LS_IC || v == MethodVariant::PSF_IC;
}

bool variant_uses_lightsheet(MethodVariant v) {
    return v == MethodVariant::LS_IC || v == MethodVariant::LS_L2;
}

std::string variant_name(MethodVariant v) {
    switch (v) {
        case MethodVariant::LS_IC: return "LS-IC";
        case MethodVariant::LS_L2: return "LS-L2";
        case MethodVariant::PSF_IC: return "PSF-IC";
        case MethodVariant::PSF_L2: return "PSF-L2";
    }
    return "?";
}

MethodVariant variant_from_name(const std::string& name) {
    if (name == "LS-IC") return MethodVariant::LS_IC;
    if (name == "LS-L2") return MethodVariant::LS_L2;
    if (name == "PSF-IC") return MethodVariant::PSF_IC;
    if (name == "PSF-L2") return MethodVariant::PSF_L2;
    throw std::invalid_argument("unknown method variant: " + name);
}

void SolverParams::validate() const {
    if (!(alpha > 0)) throw std::invalid_argument("SolverParams: alpha must be > 0");
    if (!(sigma > 0)) throw std::invalid_argument("SolverParams: sigma must be > 0");
    if (!(rho > 0 && rho < 2)) throw std::invalid_argument("SolverParams: rho in (0,2)");
    if (max_iters < 1) throw std::invalid_argument("SolverParams: max_iters >= 1");
}

Problem build_problem(MethodVariant variant, std::shared_ptr<const LinOp> op,
                      Volume f, double sigma_g, double box_lo, double box_hi) {
    if (!op) throw std::invalid_argument("build_problem: null operator");
    if (!(box_lo >= 0 && box_lo < box_hi))
        throw std::invalid_argument("build_problem: require 0 <= l1 < l2");
    Problem pb;
    pb.variant = variant;
    pb.op = std::move(op);
    pb.f = std::move(f);
    pb.sigma_g = sigma_g;
    pb.box_lo = box_lo;
    pb.box_hi = box_hi;

    // Power iteration on the self-adjoint map sum_i L_i* L_i acting on the
    // primal space. For IC variants that map is block diagonal:
    //   u-block: A*A + grad*grad, v-block: 2*Id  (H1 and H2 each touch v).
    const int nx = pb.f.nx, ny = pb.f.ny, nz = pb.f.nz;
    const bool ic = variant_is_ic(variant);
    Volume xu = random_volume(nx, ny, nz, 7);
    double lambda = 0.0;
    if (ic) {
        // v-block eigenvalue is exactly 2; iterate only the u-block
        double nrm = norm2(xu);
        xu *= 1.0 / nrm;
        for (int it = 0; it < 300; ++it) {
            Volume y = pb.op->adjoint(pb.op->apply(xu)) - div3(grad3(xu));
            double l_new = dot(xu, y);
            double ny2 = norm2(y);
            if (ny2 == 0) { lambda = 0; break; }
            y *= 1.0 / ny2;
            xu = std::move(y);
            if (it > 2 && std::abs(l_new - lambda) <= 1e-7 * std::abs(l_new)) {
                lambda = l_new;
                break;
            }
            lambda = l_new;
        }
        pb.sum_ltl_norm = std::max(std::abs(lambda), 2.0);
    } else {
        double nrm = norm2(xu);
        xu *= 1.0 / nrm;
        for (int it = 0; it < 300; ++it) {
            Volume y = pb.op->adjoint(pb.op->apply(xu)) - div3(grad3(xu));
            double l_new = dot(xu, y);
            double ny2 = norm2(y);
            if (ny2 == 0) { lambda = 0; break; }
            y *= 1.0 / ny2;
            xu = std::move(y);
            if (it > 2 && std::abs(l_new - lambda) <= 1e-7 * std::abs(l_new)) {
                lambda = l_new;
                break;
            }
            lambda = l_new;
        }
        pb.sum_ltl_norm = std::abs(lambda);
    }
    return pb;
}

double primal_dual_gap(const SolverState& s, const Problem& pb, double alpha,
                       bool isotropic_tv) {
    const bool ic = variant_is_ic(pb.variant);
    const double l1 = pb.box_lo, l2 = pb.box_hi;
    const double box_tol = 1e-9 * std::max(1.0, std::abs(l2));

    // primal terms
    double primal = 0.0;
    for (double x : s.u.data)
        if (x < l1 - box_tol || x > l2 + box_tol) return kInf;  // G(w) = +inf
    if (ic)
        for (double x : s.v.data)
            if (x < l1 - box_tol || x > l2 + box_tol) return kInf;

    auto g = grad3(s.u);
    double tv = 0.0;
    if (isotropic_tv) {
        for (size_t i = 0; i < g[0].size(); ++i)
            tv += std::sqrt(g[0].data[i] * g[0].data[i] + g[1].data[i] * g[1].data[i] +
                            g[2].data[i] * g[2].data[i]);
    } else {
        tv = norm1(g[0]) + norm1(g[1]) + norm1(g[2]);
    }
    primal += alpha * tv;

    Volume au = pb.op->apply(s.u);
    const double s2 = pb.sigma_g * pb.sigma_g;
    if (ic) {
        Volume r = s.v - pb.f;
        primal += dot(r, r) / (2.0 * s2);
        primal += kl_clamped(s.v, au);
    } else {
        Volume r = au - pb.f;
        primal += dot(r, r) / (2.0 * s2);
    }

    // dual terms
    double dual = 0.0;
    const double linf_tol = 1e-9 * alpha;
    if (isotropic_tv) {
        for (size_t i = 0; i < s.y3[0].size(); ++i) {
            double m = std::sqrt(s.y3[0].data[i] * s.y3[0].data[i] +
                                 s.y3[1].data[i] * s.y3[1].data[i] +
                                 s.y3[2].data[i] * s.y3[2].data[i]);
            if (m > alpha + linf_tol) return kInf;  // H3* = +inf
        }
    } else {
        for (const auto& comp : s.y3)
            if (norm_inf(comp) > alpha + linf_tol) return kInf;
    }

    if (ic) {
        dual += dot(pb.f, s.y1) + s2 * dot(s.y1, s.y1) / 2.0;  // H1*
        const double l1c = std::max(l1, 1e-12 * std::max(1.0, l2));
        dual += conj_kl_joint(s.y2a, s.y2b, l1c, l2);  // H2*
        Volume qu = pb.op->adjoint(s.y2a) - div3(s.y3);
        qu *= -1.0;
        Volume qv = s.y1 + s.y2b;
        qv *= -1.0;
        dual += conj_box(qu, l1, l2) + conj_box(qv, l1, l2);  // G*
    } else {
        dual += dot(pb.f, s.y1) + s2 * dot(s.y1, s.y1) / 2.0;
        Volume qu = pb.op->adjoint(s.y1) - div3(s.y3);
        qu *= -1.0;
        dual += conj_box(qu, l1, l2);
    }

    return primal + dual;
}

ReconResult pdhg_run(const Problem& pb, const SolverParams& params,
                     const SolverState* warm_start) {
    params.validate();
    if (!(pb.sum_ltl_norm > 0))
        throw std::invalid_argument("pdhg_run: problem missing operator norm estimate");
    const double sigma = params.sigma;
    const double tau = 1.0 / (sigma * pb.sum_ltl_norm);
    if (sigma * tau * pb.sum_ltl_norm > 1.0 + 1e-6)
        throw std::runtime_error("pdhg_run: step-size certificate violated");

    const bool ic = variant_is_ic(pb.variant);
    const double l1 = pb.box_lo, l2 = pb.box_hi;
    const double rho = params.rho;
    const int nx = pb.f.nx, ny = pb.f.ny, nz = pb.f.nz;
    const double fmax = std::max(pb.f.max(), 1e-30);
    const double gap_scale = static_cast<double>(pb.f.size()) * fmax;

    SolverState s;
    if (warm_start) {
        s = *warm_start;
    } else {
        s.u = project_box(pb.f, l1, l2);
        s.v = ic ? project_box(pb.f, l1, l2) : Volume(1, 1, 1);
        s.y1 = Volume(nx, ny, nz, 0.0, pb.f.pitch);
        s.y2a = ic ? Volume(nx, ny, nz, 0.0, pb.f.pitch) : Volume(1, 1, 1);
        s.y2b = ic ? Volume(nx, ny, nz, 0.0, pb.f.pitch) : Volume(1, 1, 1);
        for (auto& c : s.y3) c = Volume(nx, ny, nz, 0.0, pb.f.pitch);
        s.iter = 0;
        s.gap_history.clear();
    }

    ReconResult res;
    res.converged = false;
    const auto t0 = std::chrono::steady_clock::now();

    // gap is evaluated at the pre-relaxation (always box-feasible) point
    SolverState tilde = s;

    auto eval_gap = [&](int iter) {
        double gap = primal_dual_gap(tilde, pb, params.alpha, params.isotropic_tv);
        GapSample gs;
        gs.iter = iter;
        gs.normalized_gap = gap / gap_scale;
        if (ic) {
            Volume r = tilde.v - pb.f;
            gs.gauss_fidelity = 0.5 * dot(r, r);
            gs.kl_fidelity = kl_clamped(tilde.v, pb.op->apply(tilde.u));
        } else {
            Volume r = pb.op->apply(tilde.u) - pb.f;
            gs.gauss_fidelity = 0.5 * dot(r, r);
            gs.kl_fidelity = 0.0;
        }
        gs.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0).count();
        s.gap_history.push_back(gs);
        return gs;
    };

    int iter = s.iter;
    const int iter_end = s.iter + params.max_iters;
    double last_gap = kInf;
    while (iter < iter_end) {
        ++iter;
        // step 1: primal prox (box projection)
        Volume su = ic ? pb.op->adjoint(s.y2a) : pb.op->adjoint(s.y1);
        su -= div3(s.y3);
        Volume ut = s.u;
        ut.axpy(-tau, su);
        ut = project_box(std::move(ut), l1, l2);

        Volume vt;
        if (ic) {
            Volume sv = s.y1 + s.y2b;
            vt = s.v;
            vt.axpy(-tau, sv);
            vt = project_box(std::move(vt), l1, l2);
        }

        // over-relaxed extrapolation point 2*w_tilde - w_k
        Volume ubar = ut;
        ubar *= 2.0;
        ubar -= s.u;
        Volume vbar;
        if (ic) {
            vbar = vt;
            vbar *= 2.0;
            vbar -= s.v;
        }

        // step 2: primal relaxation
        Volume u_new = ut;
        u_new *= rho;
        u_new.axpy(1.0 - rho, s.u);
        Volume v_new;
        if (ic) {
            v_new = vt;
            v_new *= rho;
            v_new.axpy(1.0 - rho, s.v);
        }

        // step 3/4: dual proxes via Moreau, then relaxation
        {
            Volume z = s.y1;
            z.axpy(sigma, ic ? vbar : pb.op->apply(ubar));
            Volume zs = z;
            zs *= 1.0 / sigma;
            Volume p = prox_l2(zs, pb.f, pb.sigma_g, 1.0 / sigma);
            Volume yt = z;
            yt.axpy(-sigma, p);
            yt *= rho;
            yt.axpy(1.0 - rho, s.y1);
            s.y1 = std::move(yt);
        }
        if (ic) {
            Volume za = s.y2a;
            za.axpy(sigma, pb.op->apply(ubar));
            Volume zb = s.y2b;
            zb.axpy(sigma, vbar);
            Volume zas = za;
            zas *= 1.0 / sigma;
            Volume zbs = zb;
            zbs *= 1.0 / sigma;
            auto [pa, pvb] = prox_kl_joint(zas, zbs, 1.0 / sigma);
            Volume ya = za;
            ya.axpy(-sigma, pa);
            ya *= rho;
            ya.axpy(1.0 - rho, s.y2a);
            s.y2a = std::move(ya);
            Volume yb = zb;
            yb.axpy(-sigma, pvb);
            yb *= rho;
            yb.axpy(1.0 - rho, s.y2b);
            s.y2b = std::move(yb);
        }
        {
            auto gu = grad3(ubar);
            std::array<Volume, 3> z = s.y3;
            for (int c = 0; c < 3; ++c) z[c].axpy(sigma, gu[c]);
            auto yt3 = params.isotropic_tv ? prox_conj_l1_iso(z, params.alpha)
                                           : prox_conj_l1(z, params.alpha);
            for (int c = 0; c < 3; ++c) {
                yt3[c] *= rho;
                yt3[c].axpy(1.0 - rho, s.y3[c]);
                s.y3[c] = std::move(yt3[c]);
            }
        }

        s.u = std::move(u_new);
        if (ic) s.v = std::move(v_new);
        tilde.u = std::move(ut);
        if (ic) tilde.v = std::move(vt);
        tilde.y1 = s.y1;
        tilde.y2a = s.y2a;
        tilde.y2b = s.y2b;
        tilde.y3 = s.y3;
        s.iter = iter;

        if (iter % params.gap_every == 0 || iter == iter_end) {
            check_finite(s.u, "u");
            if (ic) check_finite(s.v, "v");
            auto gs = eval_gap(iter);
            last_gap = gs.normalized_gap;
            if (std::isfinite(last_gap) && last_gap <= params.gap_tol) {
                res.converged = true;
                break;
            }
        }
    }

    if (s.gap_history.empty() || s.gap_history.back().iter != iter) {
        auto gs = eval_gap(iter);
        last_gap = gs.normalized_gap;
        if (std::isfinite(last_gap) && last_gap <= params.gap_tol) res.converged = true;
    }

    res.u = tilde.u;
    res.v = ic ? tilde.v : Volume(1, 1, 1);
    res.iters = iter;
    res.final_gap = last_gap;
    res.gauss_fidelity = s.gap_history.back().gauss_fidelity;
    res.kl_fidelity = s.gap_history.back().kl_fidelity;
    res.gap_history = s.gap_history;
    res.state = std::move(s);
    return res;
}

}  // namespace lsdeconv
