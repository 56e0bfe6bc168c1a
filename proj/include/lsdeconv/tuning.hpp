#pragma once

#include <vector>

#include "lsdeconv/solver.hpp"
#include "lsdeconv/volume.hpp"

namespace lsdeconv {

enum class DiscrepancyMode { Combined, PerFidelity };

struct NoiseBounds {
    double sigma_g = 10.0;
    double gamma = 0.0;              // Poisson KL bound, typically N/2
    DiscrepancyMode mode = DiscrepancyMode::PerFidelity;
    double tau_disc = 1.01;

    double delta() const { return sigma_g * sigma_g / 2.0 + gamma; }
    void validate() const;
};

/// gamma = N/2: each voxel's Poisson component contributes an expected KL
/// summand of 1/2 in the large-count limit.
double poisson_kl_bound(const Volume& data);

struct FidelityEval {
    double gauss_term = 0.0;  // (1/2)||f - v||^2
    double kl_term = 0.0;     // D_KL(v, Au), 0 for L2-only
    double combined = 0.0;
};

/// Fidelity components at a given primal point. For L2-only variants pass
/// v = A u (the kl term is zero by construction).
FidelityEval eval_fidelity_at(const Volume& u, const Volume& v, const Volume& f,
                              const Problem& pb);

struct SweepEntry {
    double alpha = 0.0;
    FidelityEval fidelity;
    bool accepted = false;
    int iters = 0;
    double final_gap = 0.0;
};

struct DiscrepancyResult {
    double alpha = 0.0;
    ReconResult recon;
    bool criterion_met = false;  // false: no grid point passed, smallest returned
    std::vector<SweepEntry> sweep;
};

/// Descending sweep over alpha_grid with warm starts; returns the largest
/// alpha whose reconstruction satisfies the discrepancy criterion, solved at
/// exactly that alpha. Grid must be ascending with >= 2 points.
DiscrepancyResult discrepancy_search(const Problem& pb, const SolverParams& base_params,
                                     const NoiseBounds& bounds,
                                     const std::vector<double>& alpha_grid);

/// Log-spaced grid helper: points_per_decade over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points_per_decade = 8);

}  // namespace lsdeconv
