#include "lsdeconv/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsdeconv {

void NoiseBounds::validate() const {
    if (!(sigma_g >= 0)) throw std::invalid_argument("NoiseBounds: sigma_g must be >= 0");
    if (!(gamma >= 0)) throw std::invalid_argument("NoiseBounds: gamma must be >= 0");
    if (!(tau_disc > 1)) throw std::invalid_argument("NoiseBounds: tau_disc must be > 1");
}

double poisson_kl_bound(const Volume& data) {
    return static_cast<double>(data.size()) / 2.0;
}

FidelityEval eval_fidelity_at(const Volume& u, const Volume& v, const Volume& f,
                              const Problem& pb) {
    FidelityEval e;
    Volume au = pb.op->apply(u);
    if (variant_is_ic(pb.variant)) {
        Volume r = v - f;
        e.gauss_term = 0.5 * dot(r, r);
        // operator output can dip microscopically negative from FFT round-off
        Volume auc = au;
        for (double& x : auc.data) x = std::max(x, 1e-15);
        Volume vc = v;
        for (double& x : vc.data) x = std::max(x, 0.0);
        e.kl_term = kl_div(vc, auc);
    } else {
        Volume r = au - f;
        e.gauss_term = 0.5 * dot(r, r);
        e.kl_term = 0.0;
    }
    e.combined = e.gauss_term + e.kl_term;
    return e;
}

std::vector<double> log_grid(double lo, double hi, int points_per_decade) {
    if (!(lo > 0 && hi > lo)) throw std::invalid_argument("log_grid: require 0 < lo < hi");
    if (points_per_decade < 1)
        throw std::invalid_argument("log_grid: points_per_decade must be >= 1");
    const double decades = std::log10(hi / lo);
    const int n = std::max(2, static_cast<int>(std::round(decades * points_per_decade)) + 1);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(10.0, decades * i / (n - 1));
    g.back() = hi;
    return g;
}

namespace {

bool criterion_ok(const FidelityEval& e, const NoiseBounds& b, size_t n) {
    if (b.mode == DiscrepancyMode::Combined)
        return e.combined <= b.tau_disc * b.delta();
    const double gauss_bound = b.tau_disc * b.sigma_g * b.sigma_g * static_cast<double>(n) / 2.0;
    return e.gauss_term <= gauss_bound && e.kl_term <= b.tau_disc * b.gamma;
}

}  // namespace

DiscrepancyResult discrepancy_search(const Problem& pb, const SolverParams& base_params,
                                     const NoiseBounds& bounds,
                                     const std::vector<double>& alpha_grid) {
    bounds.validate();
    if (alpha_grid.size() < 2)
        throw std::invalid_argument("discrepancy_search: grid needs >= 2 points");
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()))
        throw std::invalid_argument("discrepancy_search: grid must be ascending");
    if (!(alpha_grid.front() > 0))
        throw std::invalid_argument("discrepancy_search: alphas must be > 0");

    DiscrepancyResult res;
    res.sweep.resize(alpha_grid.size());

    // sweep from the largest alpha down, warm-starting each solve from the
    // previous one; the sup criterion means the first passing alpha wins
    const SolverState* warm = nullptr;
    SolverState warm_state;
    bool found = false;
    ReconResult last_recon;
    for (int gi = static_cast<int>(alpha_grid.size()) - 1; gi >= 0; --gi) {
        SolverParams p = base_params;
        p.alpha = alpha_grid[gi];
        ReconResult rr = pdhg_run(pb, p, warm);

        SweepEntry& ent = res.sweep[gi];
        ent.alpha = p.alpha;
        const Volume& v_eval = variant_is_ic(pb.variant) ? rr.v : rr.u;
        ent.fidelity = eval_fidelity_at(rr.u, v_eval, pb.f, pb);
        ent.iters = rr.iters;
        ent.final_gap = rr.final_gap;
        ent.accepted = criterion_ok(ent.fidelity, bounds, pb.f.size());

        warm_state = rr.state;
        warm_state.iter = 0;  // reset the budget for the next grid point
        warm_state.gap_history.clear();
        warm = &warm_state;
        last_recon = std::move(rr);

        if (ent.accepted) {
            res.alpha = ent.alpha;
            res.recon = std::move(last_recon);
            res.criterion_met = true;
            found = true;
            break;
        }
    }
    if (!found) {
        res.alpha = alpha_grid.front();
        res.recon = std::move(last_recon);
        res.criterion_met = false;
    }
    return res;
}

}  // namespace lsdeconv
