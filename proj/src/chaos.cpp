#include "qutop/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace qutop {

namespace {

void check_lengths(const EntanglementSeries& e1, const EntanglementSeries& e2) {
    if (e1.values.size() != e2.values.size())
        throw LengthMismatch("series lengths differ");
    if (e1.values.size() < 2) throw LengthMismatch("series needs at least two samples");
}

// Mean over 10 contiguous blocks plus the standard error of that mean.
EtaEstimate block_average(const std::vector<double>& terms, double scale) {
    const size_t n = terms.size();
    const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
    EtaEstimate out;
    out.value = scale * total / static_cast<double>(n);

    const size_t blocks = std::min<size_t>(10, n);
    if (blocks < 2) return out;
    std::vector<double> block_means;
    block_means.reserve(blocks);
    for (size_t b = 0; b < blocks; ++b) {
        const size_t lo = b * n / blocks;
        const size_t hi = (b + 1) * n / blocks;
        const double sum = std::accumulate(terms.begin() + static_cast<long>(lo),
                                           terms.begin() + static_cast<long>(hi), 0.0);
        block_means.push_back(scale * sum / static_cast<double>(hi - lo));
    }
    const double mean = std::accumulate(block_means.begin(), block_means.end(), 0.0) /
                        static_cast<double>(blocks);
    double var = 0.0;
    for (double m : block_means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(blocks - 1);
    out.std_error = std::sqrt(var / static_cast<double>(blocks));
    return out;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const auto n = static_cast<double>(xs.size());
    const double sx = std::accumulate(xs.begin(), xs.end(), 0.0);
    const double sy = std::accumulate(ys.begin(), ys.end(), 0.0);
    double sxx = 0.0;
    double sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

} // namespace

int sign_step(double x, double tol) {
    if (x > tol) return 1;
    if (x < -tol) return -1;
    return 0;
}

EtaEstimate eta_d(const EntanglementSeries& e1, const EntanglementSeries& e2, double delta_s) {
    check_lengths(e1, e2);
    if (!(delta_s >= 0.0 && delta_s <= 1.0)) throw OutOfRange("delta_s must lie in [0,1]");
    const size_t n = e1.values.size() - 1;
    std::vector<double> terms(n);
    for (size_t t = 1; t <= n; ++t) {
        terms[t - 1] = static_cast<double>(sign_step(e1.values[t] - e1.values[t - 1]) *
                                           sign_step(e2.values[t] - e2.values[t - 1]));
    }
    return block_average(terms, std::abs(delta_s));
}

EtaEstimate eta_g(const EntanglementSeries& e1, const EntanglementSeries& e2) {
    check_lengths(e1, e2);
    const size_t n = e1.values.size() - 1;
    std::vector<double> terms(n);
    for (size_t t = 1; t <= n; ++t)
        terms[t - 1] = (e1.values[t] - e1.values[t - 1]) * (e2.values[t] - e2.values[t - 1]);
    return block_average(terms, 1.0);
}

CorrelationResult correlate(const EntanglementSeries& e1, const EntanglementSeries& e2,
                            double delta_s) {
    const EtaEstimate d = eta_d(e1, e2, delta_s);
    const EtaEstimate g = eta_g(e1, e2);
    CorrelationResult out;
    out.eta_d = d.value;
    out.eta_d_std_error = d.std_error;
    out.eta_g = g.value;
    out.eta_g_std_error = g.std_error;
    out.delta_s = delta_s;
    out.n_steps = static_cast<long>(e1.values.size()) - 1;
    return out;
}

EntanglementSeries negativity_trajectory(const TopParams& params, const CoherentParam& gamma1,
                                         const CoherentParam& gamma2, double p, long n_steps) {
    const FloquetOperator op = build_floquet(params);
    const DensityMatrix rho0 = initial_density(params.j, gamma1, gamma2, p);
    EntanglementSeries series;
    series.params = params;
    series.gamma1 = gamma1;
    series.gamma2 = gamma2;
    series.p = p;
    series.values.reserve(static_cast<size_t>(n_steps) + 1);
    evolve_observe(rho0, op, n_steps, params.k_im > 0.0,
                   [&](long, const DensityMatrix& rho) {
                       series.values.push_back(log_negativity(rho));
                   });
    return series;
}

StationaryResult stationary_negativity(const TopParams& params, const CoherentParam& gamma1,
                                       const CoherentParam& gamma2, double p,
                                       const ConvergenceSettings& settings) {
    if (!(params.k_im > 0.0))
        throw std::invalid_argument("stationary negativity requires k_im > 0");
    if (settings.window < 2 || settings.t_max < settings.window)
        throw std::invalid_argument("convergence window does not fit in t_max");

    const FloquetOperator op = build_floquet(params);
    DensityMatrix rho = initial_density(params.j, gamma1, gamma2, p);
    std::deque<double> window;
    StationaryResult result;
    for (long t = 0; t <= settings.t_max; ++t) {
        if (t > 0) rho = step(rho, op, true);
        window.push_back(log_negativity(rho));
        if (static_cast<long>(window.size()) > settings.window) window.pop_front();
        if (static_cast<long>(window.size()) == settings.window) {
            const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
            const double spread = *hi - *lo;
            result.value = std::accumulate(window.begin(), window.end(), 0.0) /
                           static_cast<double>(window.size());
            result.window_spread = spread;
            result.t_reached = t;
            if (spread <= settings.tol) {
                result.converged = true;
                return result;
            }
        }
    }
    result.converged = false;
    return result;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw NonPositiveData("power-law fit needs at least 3 points");
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& [eps, value] : points) {
        if (!(eps > 0.0) || !(value > 0.0))
            throw NonPositiveData("power-law fit requires positive data");
        xs.push_back(std::log(eps));
        ys.push_back(std::log(value));
    }
    const LinearFit fit = linear_fit(xs, ys);
    return {fit.slope, std::exp(fit.intercept), fit.rms_residual};
}

double local_max_slope(const TopParams& params, const CoherentParam& gamma1,
                       const CoherentParam& gamma2, const std::vector<double>& p_grid, long t_lo,
                       long t_hi) {
    if (params.k_im != 0.0)
        throw std::invalid_argument("local-max slope is defined for unitary dynamics");
    if (t_lo < 0 || t_hi < t_lo) throw EmptyWindow("window [t_lo, t_hi] is empty");
    if (p_grid.empty()) throw EmptyWindow("p grid is empty");
    for (double p : p_grid)
        if (!(p >= 0.0 && p <= 0.5)) throw OutOfRange("p grid must lie in [0, 0.5]");

    std::vector<double> maxima;
    maxima.reserve(p_grid.size());
    for (double p : p_grid) {
        const EntanglementSeries series = negativity_trajectory(params, gamma1, gamma2, p, t_hi);
        const auto begin = series.values.begin() + t_lo;
        maxima.push_back(*std::max_element(begin, series.values.end()));
    }
    if (p_grid.size() < 2) return 0.0;
    return -linear_fit(p_grid, maxima).slope;
}

double coherent_overlap_sq(double j, const CoherentParam& gamma1, const CoherentParam& gamma2) {
    return std::norm(coherent_overlap(j, gamma1, gamma2));
}

} // namespace qutop
