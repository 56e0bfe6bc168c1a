#pragma once

#include <array>

#include "lsdeconv/volume.hpp"

namespace lsdeconv {

enum class FidelityKind { L2Only, InfimalConvolution };

struct FidelitySpec {
    FidelityKind kind = FidelityKind::InfimalConvolution;
    double sigma_g = 10.0;  // Gaussian noise std
    double box_lo = 0.0, box_hi = 1.0;

    void validate() const;
};

/// Csiszar-form KL divergence: sum_j u_j - v_j + v_j log(v_j/u_j), with
/// 0*log 0 = 0; +inf if v_j > 0 where u_j = 0. Throws on negative inputs.
double kl_div(const Volume& v, const Volume& u);

/// Scalar joint KL prox: argmin over u,v >= 0 of
///   u - v + v log(v/u) + (1/2g)[(u-u*)^2 + (v-v*)^2].
/// Interior solutions come from a safeguarded Newton solve on the strictly
/// increasing root function; when no positive root exists the minimizer is
/// the corner (0,0).
struct KlProxResult {
    double u = 0.0, v = 0.0;
    bool interior = true;
    double residual = 0.0;  // |g(v)|/gamma, the stationarity defect
};
KlProxResult prox_kl_scalar(double u_star, double v_star, double gamma);

/// Elementwise joint KL prox over volumes; returns (u, v).
std::pair<Volume, Volume> prox_kl_joint(const Volume& u_star, const Volume& v_star,
                                        double gamma);

/// Scalar convex conjugate of the joint KL summand restricted to [l1,l2]^2:
///   sup { u u* + v v* - u + v - v log(v/u) }.
/// Requires 0 < l1 < l2. Resolved by KKT case enumeration (the objective is
/// concave, so the max over feasible stationary candidates is exact).
double conj_kl_scalar(double u_star, double v_star, double l1, double l2);

/// Sum of per-pixel conjugates for dual pair (y_u, y_v).
double conj_kl_joint(const Volume& u_star, const Volume& v_star, double l1, double l2);

/// Closed-form prox of x -> ||x-f||^2/(2 sigma^2): (s^2 v* + tau f)/(s^2 + tau).
Volume prox_l2(const Volume& v_star, const Volume& f, double sigma_g, double tau);

/// Forward differences, replicate (Neumann) boundary: last-plane entries 0.
std::array<Volume, 3> grad3(const Volume& u);
/// Negative adjoint of grad3, exactly: <grad3 u, p> = -<u, div3 p>.
Volume div3(const std::array<Volume, 3>& p);

/// Prox of the conjugate of alpha*||.||_1: componentwise clamp to [-alpha, alpha].
std::array<Volume, 3> prox_conj_l1(std::array<Volume, 3> y, double alpha);

/// Isotropic variant: per-voxel projection of the gradient vector onto the
/// alpha-ball.
std::array<Volume, 3> prox_conj_l1_iso(std::array<Volume, 3> y, double alpha);

/// Soft thresholding, prox of alpha*||.||_1 (used for Moreau cross-checks).
std::array<Volume, 3> prox_l1(std::array<Volume, 3> y, double alpha);

/// Elementwise clamp of both components to [l1, l2].
std::pair<Volume, Volume> project_box(std::pair<Volume, Volume> w, double l1, double l2);
Volume project_box(Volume w, double l1, double l2);

/// Conjugate of the box indicator: sum_j max(l1*y_j, l2*y_j).
double conj_box(const Volume& y, double l1, double l2);

}  // namespace lsdeconv
