#pragma once

#include <utility>
#include <vector>

#include "qutop/dynamics.hpp"
#include "qutop/measures.hpp"

namespace qutop {

/// Log-negativity values indexed by kick step t = 0..N, with the run
/// parameters snapshotted alongside.
struct EntanglementSeries {
    std::vector<double> values;
    TopParams params;
    CoherentParam gamma1;
    CoherentParam gamma2;
    double p = 0.0;
};

struct EtaEstimate {
    double value = 0.0;
    double std_error = 0.0; // block-averaged over 10 blocks
};

struct CorrelationResult {
    double eta_d = 0.0;
    double eta_d_std_error = 0.0;
    double eta_g = 0.0;
    double eta_g_std_error = 0.0;
    double delta_s = 0.0;
    long n_steps = 0;
};

struct ConvergenceSettings {
    long window = 200;
    double tol = 1e-6;
    long t_max = 100000;
};

/// Stationary value with its convergence report. Non-convergence is a
/// labeled partial result, not an error.
struct StationaryResult {
    double value = 0.0;
    bool converged = false;
    long t_reached = 0;
    double window_spread = 0.0;
};

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0; // rms residual of the log-log fit
};

/// Theta of Eq. 1: +1 above tol, -1 below -tol, 0 inside the dead zone.
int sign_step(double x, double tol = 1e-12);

/// Scaled rank correlation (|DeltaS|/N) sum Theta(dE1) Theta(dE2).
EtaEstimate eta_d(const EntanglementSeries& e1, const EntanglementSeries& e2, double delta_s);

/// Cross correlation (1/N) sum dE1 dE2.
EtaEstimate eta_g(const EntanglementSeries& e1, const EntanglementSeries& e2);

CorrelationResult correlate(const EntanglementSeries& e1, const EntanglementSeries& e2,
                            double delta_s);

/// Log-negativity trajectory of rho_p(t) for t = 0..n_steps; renormalizes
/// whenever k_im > 0.
EntanglementSeries negativity_trajectory(const TopParams& params, const CoherentParam& gamma1,
                                         const CoherentParam& gamma2, double p, long n_steps);

/// Running-window estimate of N(t -> infinity) under amplified dynamics
/// (requires k_im > 0): converged once max-min over the window is at most
/// settings.tol.
StationaryResult stationary_negativity(const TopParams& params, const CoherentParam& gamma1,
                                       const CoherentParam& gamma2, double p,
                                       const ConvergenceSettings& settings);

/// Least-squares fit of log(value) against log(epsilon).
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

/// Decline rate of the local-max negativity inside [t_lo, t_hi] against p
/// (negated linear slope). Unitary dynamics only.
double local_max_slope(const TopParams& params, const CoherentParam& gamma1,
                       const CoherentParam& gamma2, const std::vector<double>& p_grid, long t_lo,
                       long t_hi);

/// delta_entropy argument for a coherent pair: |<g1|g2>|^2, which equals
/// the product-state overlap <psi+|psi->.
double coherent_overlap_sq(double j, const CoherentParam& gamma1, const CoherentParam& gamma2);

} // namespace qutop
