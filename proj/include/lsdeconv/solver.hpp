#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lsdeconv/fidelity.hpp"
#include "lsdeconv/forward.hpp"
#include "lsdeconv/volume.hpp"

namespace lsdeconv {

/// Method variants: forward operator (light-sheet L vs plain convolution H)
/// crossed with data fidelity (infimal convolution vs L2-only).
enum class MethodVariant { LS_IC, LS_L2, PSF_IC, PSF_L2 };

bool variant_is_ic(MethodVariant v);
bool variant_uses_lightsheet(MethodVariant v);
std::string variant_name(MethodVariant v);
MethodVariant variant_from_name(const std::string& name);

struct SolverParams {
    double alpha = 0.01;       // TV weight
    double sigma = 1e-4;       // dual step
    double rho = 0.9;          // relaxation, in (0, 2)
    int max_iters = 10000;
    double gap_tol = 1e-6;     // on the normalized primal-dual gap
    int gap_every = 10;
    bool isotropic_tv = false;
    uint64_t seed = 1;

    void validate() const;
};

/// A fully wired saddle-point problem: operator, data, fidelity and box.
struct Problem {
    MethodVariant variant = MethodVariant::LS_IC;
    std::shared_ptr<const LinOp> op;  // L or H depending on variant
    Volume f;
    double sigma_g = 10.0;
    double box_lo = 0.0, box_hi = 1.0;
    double sum_ltl_norm = 0.0;  // ||sum_i L_i* L_i||, estimated at build time
};

Problem build_problem(MethodVariant variant, std::shared_ptr<const LinOp> op,
                      Volume f, double sigma_g, double box_lo, double box_hi);

struct GapSample {
    int iter = 0;
    double normalized_gap = 0.0;
    double gauss_fidelity = 0.0;  // (1/2)||f - v||^2 (or ||f - Au||^2 for L2-only)
    double kl_fidelity = 0.0;     // D_KL(v, Au), 0 for L2-only
    double wall_ms = 0.0;
};

struct SolverState {
    Volume u, v;               // primal pair (v unused for L2-only variants)
    Volume y1;                 // dual of the L2 term
    Volume y2a, y2b;           // dual of the joint KL term (IC only)
    std::array<Volume, 3> y3;  // dual of the TV term
    int iter = 0;
    std::vector<GapSample> gap_history;
};

struct ReconResult {
    Volume u, v;
    int iters = 0;
    double final_gap = 0.0;
    double gauss_fidelity = 0.0;
    double kl_fidelity = 0.0;
    bool converged = false;
    std::vector<GapSample> gap_history;
    SolverState state;  // for warm starts
};

/// Primal-dual gap at a feasible primal point, evaluated with the
/// box-restricted KL conjugate. +inf is a valid early-iterate outcome.
double primal_dual_gap(const SolverState& s, const Problem& pb, double alpha,
                       bool isotropic_tv = false);

/// Condat-variant PDHG over the composite splitting. Stops when the
/// normalized gap drops below gap_tol or max_iters is reached.
ReconResult pdhg_run(const Problem& pb, const SolverParams& params,
                     const SolverState* warm_start = nullptr);

}  // namespace lsdeconv
