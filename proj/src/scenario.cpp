#include "qutop/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

namespace qutop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_key(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

const std::vector<std::string>& convention_lines() {
    static const std::vector<std::string> lines = {
        "basis: |j,m> product basis, m descending; flat index (j-m1)*(2j+1) + (j-m2)",
        "partial transpose: second top; log-negativity in log base 2",
        "series pairing: E1 is the p=0 trajectory, E2 the p=0.5 trajectory",
        "delta_s: base-2 entropy of the two-outcome mixture, argument x = |<gamma1|gamma2>|^2 "
        "(the product-state overlap <psi+|psi->)",
        "renormalization: per kick step when Im(k) > 0; projectively identical to "
        "renormalizing once at readout",
    };
    return lines;
}

json conventions_json() {
    json out = json::array();
    for (const auto& line : convention_lines()) out.push_back(line);
    return out;
}

// -----------------------------------------------------------------------
// Config <-> JSON

void check_keys(const json& doc, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return it.key() == k;
            }) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

CoherentParam gamma_from_json(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw ConfigError(where + " must be an object");
    check_keys(doc, {"re", "im", "theta", "phi", "pole"}, where);
    if (doc.value("pole", false)) return CoherentParam::pole();
    if (doc.contains("theta") || doc.contains("phi")) {
        if (doc.contains("re") || doc.contains("im"))
            throw ConfigError(where + ": give either re/im or theta/phi");
        return CoherentParam::from_angles(doc.value("theta", 0.0), doc.value("phi", 0.0));
    }
    return {doc.value("re", 0.0), doc.value("im", 0.0)};
}

json gamma_to_json(const CoherentParam& g) {
    if (g.at_pole) return json{{"pole", true}};
    return json{{"re", g.gamma.real()}, {"im", g.gamma.imag()}};
}

void validate(const ScenarioConfig& cfg) {
    const auto& ids = scenario_ids();
    if (std::find(ids.begin(), ids.end(), cfg.scenario) == ids.end())
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");
    const double two_j = 2.0 * cfg.j;
    if (!(cfg.j > 0.0) || std::abs(two_j - std::round(two_j)) > 1e-9)
        throw ConfigError("j must be a positive half-integer");
    if (cfg.k_im < 0.0) throw ConfigError("k_im must be non-negative");
    if (cfg.p_values.empty()) throw ConfigError("p_values must be non-empty");
    for (double p : cfg.p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p values must lie in [0,1]");
    if (cfg.n_steps < 1) throw ConfigError("n_steps must be at least 1");
    if (!cfg.sweep_axis.empty() && cfg.sweep_axis != "k_re" && cfg.sweep_axis != "epsilon")
        throw ConfigError("sweep axis must be 'k_re' or 'epsilon'");
    if (!cfg.sweep_axis.empty() && cfg.sweep_grid.empty())
        throw ConfigError("sweep grid must be non-empty");
    if (cfg.convergence.window < 2) throw ConfigError("convergence window must be >= 2");
    if (!(cfg.convergence.tol > 0.0)) throw ConfigError("convergence tol must be positive");
    if (cfg.convergence.t_max < cfg.convergence.window)
        throw ConfigError("convergence t_max must be >= window");
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
}

} // namespace

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids = {"fig1", "fig2", "fig3", "fig4", "fig5",
                                                 "fig6", "fig7", "fig8", "custom"};
    return ids;
}

ScenarioConfig scenario_defaults(const std::string& id) {
    ScenarioConfig cfg;
    cfg.scenario = id;
    auto grid = [](double lo, double hi, double step) {
        std::vector<double> g;
        for (long i = 0;; ++i) {
            const double v = lo + step * static_cast<double>(i);
            if (v > hi + 1e-12) break;
            g.push_back(v);
        }
        return g;
    };
    if (id == "fig1") {
        cfg.k_im = 0.0;
        cfg.n_steps = 1000;
        cfg.sweep_axis = "k_re";
        cfg.sweep_grid = {0.25, 3.0, 6.0};
    } else if (id == "fig2") {
        cfg.k_im = 0.0;
        cfg.n_steps = 10000;
        cfg.sweep_axis = "k_re";
        cfg.sweep_grid = {0.25, 3.0, 6.0};
    } else if (id == "fig3") {
        cfg.k_im = 0.0;
        cfg.n_steps = 10000;
        cfg.sweep_axis = "k_re";
        cfg.sweep_grid = grid(0.2, 8.0, 0.2);
    } else if (id == "fig4") {
        cfg.k_im = 0.01;
        cfg.n_steps = 1000;
        cfg.p_values = {0.0};
        cfg.sweep_axis = "k_re";
        cfg.sweep_grid = {0.25, 3.0, 6.0};
    } else if (id == "fig5") {
        cfg.k_im = 0.01;
        cfg.n_steps = 1000; // snapshot step; the converged value is also emitted
        cfg.p_values = {0.0};
        cfg.sweep_axis = "k_re";
        cfg.sweep_grid = grid(0.25, 9.0, 0.25);
    } else if (id == "fig6") {
        cfg.n_steps = 1000;
        cfg.p_values = {0.0};
        cfg.sweep_axis = "epsilon";
        cfg.sweep_grid = grid(0.01, 0.1, 0.01);
        auto coarse = grid(0.15, 1.2, 0.05);
        cfg.sweep_grid.insert(cfg.sweep_grid.end(), coarse.begin(), coarse.end());
    } else if (id == "fig7") {
        cfg.k_re = 0.25;
        cfg.k_prime = 0.26;
        cfg.n_steps = 1000;
        cfg.p_values = {0.0, 0.2, 0.5};
        cfg.sweep_axis = "epsilon";
        cfg.sweep_grid = {0.02, 0.05};
    } else if (id == "fig8") {
        cfg.k_re = 0.25;
        cfg.k_prime = 0.26;
        cfg.n_steps = 2000;
        cfg.p_values = {0.0, 0.5};
        cfg.sweep_axis = "epsilon";
        cfg.sweep_grid = {0.0, 0.5};
    } else if (id != "custom") {
        throw ConfigError("unknown scenario '" + id + "'");
    }
    return cfg;
}

ScenarioConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(doc,
               {"scenario", "j", "k_re", "k_im", "k_prime", "epsilon", "gamma1", "gamma2",
                "p_values", "n_steps", "sweep", "convergence", "out_dir", "jobs"},
               "config");
    ScenarioConfig cfg;
    cfg.scenario = doc.value("scenario", cfg.scenario);
    cfg.j = doc.value("j", cfg.j);
    cfg.k_re = doc.value("k_re", cfg.k_re);
    cfg.k_im = doc.value("k_im", cfg.k_im);
    if (doc.contains("k_prime") && !doc["k_prime"].is_null())
        cfg.k_prime = doc["k_prime"].get<double>();
    cfg.epsilon = doc.value("epsilon", cfg.epsilon);
    if (doc.contains("gamma1")) cfg.gamma1 = gamma_from_json(doc["gamma1"], "gamma1");
    if (doc.contains("gamma2")) cfg.gamma2 = gamma_from_json(doc["gamma2"], "gamma2");
    if (doc.contains("p_values")) cfg.p_values = doc["p_values"].get<std::vector<double>>();
    cfg.n_steps = doc.value("n_steps", cfg.n_steps);
    if (doc.contains("sweep")) {
        check_keys(doc["sweep"], {"axis", "grid"}, "sweep");
        cfg.sweep_axis = doc["sweep"].value("axis", cfg.sweep_axis);
        if (doc["sweep"].contains("grid"))
            cfg.sweep_grid = doc["sweep"]["grid"].get<std::vector<double>>();
    }
    if (doc.contains("convergence")) {
        check_keys(doc["convergence"], {"window", "tol", "t_max"}, "convergence");
        cfg.convergence.window = doc["convergence"].value("window", cfg.convergence.window);
        cfg.convergence.tol = doc["convergence"].value("tol", cfg.convergence.tol);
        cfg.convergence.t_max = doc["convergence"].value("t_max", cfg.convergence.t_max);
    }
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.jobs = doc.value("jobs", cfg.jobs);
    validate(cfg);
    return cfg;
}

json config_to_json(const ScenarioConfig& cfg) {
    json doc{{"scenario", cfg.scenario},
             {"j", cfg.j},
             {"k_re", cfg.k_re},
             {"k_im", cfg.k_im},
             {"epsilon", cfg.epsilon},
             {"gamma1", gamma_to_json(cfg.gamma1)},
             {"gamma2", gamma_to_json(cfg.gamma2)},
             {"p_values", cfg.p_values},
             {"n_steps", cfg.n_steps},
             {"sweep", {{"axis", cfg.sweep_axis}, {"grid", cfg.sweep_grid}}},
             {"convergence",
              {{"window", cfg.convergence.window},
               {"tol", cfg.convergence.tol},
               {"t_max", cfg.convergence.t_max}}},
             {"out_dir", cfg.out_dir},
             {"jobs", cfg.jobs}};
    if (cfg.k_prime) doc["k_prime"] = *cfg.k_prime;
    return doc;
}

json merge_config(json base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) return overlay;
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()))
            base[it.key()] = merge_config(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
    return base;
}

void apply_set_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw; // bare strings are allowed unquoted
    }
    json* node = &doc;
    size_t pos = 0;
    while (true) {
        const size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw ConfigError("--set has an empty path segment in '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

// -----------------------------------------------------------------------
// Scenario execution

namespace {

struct SeriesOut {
    std::string key;
    std::string quantity; // CSV value column name
    std::vector<std::string> meta;
    std::vector<double> values;
};

struct Outputs {
    std::vector<SeriesOut> series;
    std::vector<std::string> summary_columns;
    std::vector<std::vector<std::string>> summary_rows;
    json metrics = json::object();
    json convergence = json::array();
};

void run_tasks(std::vector<std::function<void()>>& tasks, int jobs) {
    if (jobs <= 1 || tasks.size() <= 1) {
        for (auto& task : tasks) task();
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                tasks[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string param_line(const TopParams& tp, const CoherentParam& g1, const CoherentParam& g2,
                       double p) {
    auto gam = [](const CoherentParam& g) {
        if (g.at_pole) return std::string("pole");
        return "(" + fmt_key(g.gamma.real()) + "," + fmt_key(g.gamma.imag()) + ")";
    };
    return "j=" + fmt_key(tp.j) + " k_re=" + fmt_key(tp.k_re) + " k_im=" + fmt_key(tp.k_im) +
           " epsilon=" + fmt_key(tp.epsilon) + " gamma1=" + gam(g1) + " gamma2=" + gam(g2) +
           " p=" + fmt_key(p);
}

double delta_s_for(double j, const CoherentParam& g1, const CoherentParam& g2) {
    return delta_entropy(coherent_overlap_sq(j, g1, g2));
}

json stationary_json(const std::string& key, const StationaryResult& r) {
    return json{{"key", key},
                {"value", r.value},
                {"converged", r.converged},
                {"t_reached", r.t_reached},
                {"window_spread", r.window_spread}};
}

// ---- fig1 / fig4: log-negativity vs t --------------------------------

void run_negativity_series(const ScenarioConfig& cfg, Outputs& out) {
    struct Point {
        double k;
        double p;
        EntanglementSeries series;
    };
    std::vector<Point> points;
    for (double k : cfg.sweep_grid) {
        auto ps = cfg.p_values;
        std::sort(ps.begin(), ps.end());
        for (double p : ps) points.push_back({k, p, {}});
    }
    std::vector<std::function<void()>> tasks;
    tasks.reserve(points.size());
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt] {
            const TopParams tp{cfg.j, pt.k, cfg.k_im, cfg.epsilon};
            pt.series = negativity_trajectory(tp, cfg.gamma1, cfg.gamma2, pt.p, cfg.n_steps);
        });
    }
    run_tasks(tasks, cfg.jobs);

    const double ds = delta_s_for(cfg.j, cfg.gamma1, cfg.gamma2);
    out.summary_columns = {"k_re",    "k_im",     "p",           "delta_s", "n_steps",
                           "final",   "max_value", "t_at_max"};
    for (auto& pt : points) {
        SeriesOut s;
        s.key = "neg_k" + fmt_key(pt.k) + "_p" + fmt_key(pt.p);
        s.quantity = "log_negativity";
        s.meta = {param_line({cfg.j, pt.k, cfg.k_im, cfg.epsilon}, cfg.gamma1, cfg.gamma2, pt.p)};
        s.values = std::move(pt.series.values);
        const auto max_it = std::max_element(s.values.begin(), s.values.end());
        out.summary_rows.push_back({fmt_key(pt.k), fmt_key(cfg.k_im), fmt_key(pt.p), fmt17(ds),
                                    std::to_string(cfg.n_steps), fmt17(s.values.back()),
                                    fmt17(*max_it),
                                    std::to_string(max_it - s.values.begin())});
        out.series.push_back(std::move(s));
    }
}

// ---- fig2: eta values for the paper's initial-state sets ----------------

struct GammaSet {
    std::string label;
    CoherentParam g1;
    CoherentParam g2;
    std::vector<double> ks;
};

void run_eta_sets(const ScenarioConfig& cfg, const std::vector<GammaSet>& sets, Outputs& out,
                  bool emit_series) {
    struct Point {
        const GammaSet* set;
        double k;
        EntanglementSeries e1, e2;
    };
    std::vector<Point> points;
    for (const auto& set : sets)
        for (double k : set.ks) points.push_back({&set, k, {}, {}});

    std::vector<std::function<void()>> tasks;
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt] {
            const TopParams tp{cfg.j, pt.k, cfg.k_im, cfg.epsilon};
            pt.e1 = negativity_trajectory(tp, pt.set->g1, pt.set->g2, 0.0, cfg.n_steps);
            pt.e2 = negativity_trajectory(tp, pt.set->g1, pt.set->g2, 0.5, cfg.n_steps);
        });
    }
    run_tasks(tasks, cfg.jobs);

    out.summary_columns = {"set",     "k_re",    "gamma1_re", "gamma1_im", "gamma2_re",
                           "gamma2_im", "delta_s", "n_steps",   "eta_d",     "eta_d_std_error",
                           "eta_d_unit", "eta_g",  "eta_g_std_error"};
    for (auto& pt : points) {
        const double ds = delta_s_for(cfg.j, pt.set->g1, pt.set->g2);
        const CorrelationResult c = correlate(pt.e1, pt.e2, ds);
        const EtaEstimate unit = eta_d(pt.e1, pt.e2, 1.0);
        out.summary_rows.push_back(
            {pt.set->label, fmt_key(pt.k), fmt17(pt.set->g1.gamma.real()),
             fmt17(pt.set->g1.gamma.imag()), fmt17(pt.set->g2.gamma.real()),
             fmt17(pt.set->g2.gamma.imag()), fmt17(ds), std::to_string(c.n_steps),
             fmt17(c.eta_d), fmt17(c.eta_d_std_error), fmt17(unit.value), fmt17(c.eta_g),
             fmt17(c.eta_g_std_error)});
        if (emit_series) {
            for (auto* series : {&pt.e1, &pt.e2}) {
                SeriesOut s;
                s.key = "neg_" + pt.set->label + "_k" + fmt_key(pt.k) + "_p" +
                        fmt_key(series->p);
                s.quantity = "log_negativity";
                s.meta = {param_line(series->params, series->gamma1, series->gamma2, series->p)};
                s.values = std::move(series->values);
                out.series.push_back(std::move(s));
            }
        }
    }
}

std::vector<GammaSet> fig2_sets(const ScenarioConfig& cfg) {
    // The four k=3 states are fixed/fixed/chaotic/chaotic points of the
    // single top: gamma1 = -gamma2 = 1, tan(2.25/2) e^{0.63i}, 3,
    // tan(0.89/2) e^{0.63i}.
    const Complex v2 = std::polar(std::tan(2.25 / 2.0), 0.63);
    const Complex v4 = std::polar(std::tan(0.89 / 2.0), 0.63);
    return {
        {"main", cfg.gamma1, cfg.gamma2, cfg.sweep_grid},
        {"fixed1", {1.0, 0.0}, {-1.0, 0.0}, cfg.sweep_grid},
        {"fixed2", {v2}, {-v2}, {3.0}},
        {"chaotic1", {3.0, 0.0}, {-3.0, 0.0}, {3.0}},
        {"chaotic2", {v4}, {-v4}, {3.0}},
    };
}

// ---- fig3: eta_d / eta_g over a k grid ---------------------------------

void run_fig3(const ScenarioConfig& cfg, Outputs& out) {
    GammaSet set{"main", cfg.gamma1, cfg.gamma2, cfg.sweep_grid};
    run_eta_sets(cfg, {set}, out, /*emit_series=*/false);
}

// ---- fig5: negativity snapshot at n_steps plus converged value ---------

void run_fig5(const ScenarioConfig& cfg, Outputs& out) {
    if (!(cfg.k_im > 0.0)) throw ConfigError("fig5 requires k_im > 0");
    struct Point {
        std::string set;
        CoherentParam g1, g2;
        double k;
        double snapshot = 0.0;
        StationaryResult stat;
    };
    const CoherentParam chaotic(std::polar(std::tan(0.89 / 2.0), 0.63));
    std::vector<Point> points;
    for (double k : cfg.sweep_grid) {
        points.push_back({"main", cfg.gamma1, cfg.gamma2, k, 0.0, {}});
        points.push_back({"chaotic", chaotic, chaotic, k, 0.0, {}});
    }
    const double p = cfg.p_values.front();
    std::vector<std::function<void()>> tasks;
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt, p] {
            const TopParams tp{cfg.j, pt.k, cfg.k_im, cfg.epsilon};
            pt.snapshot = negativity_trajectory(tp, pt.g1, pt.g2, p, cfg.n_steps).values.back();
            pt.stat = stationary_negativity(tp, pt.g1, pt.g2, p, cfg.convergence);
        });
    }
    run_tasks(tasks, cfg.jobs);

    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
        return std::tie(a.set, a.k) < std::tie(b.set, b.k);
    });
    out.summary_columns = {"set",       "k_re",      "k_im",     "epsilon",      "p",
                           "snapshot",  "stationary", "converged", "t_reached",    "window_spread"};
    for (const auto& pt : points) {
        out.summary_rows.push_back({pt.set, fmt_key(pt.k), fmt_key(cfg.k_im),
                                    fmt_key(cfg.epsilon), fmt_key(p), fmt17(pt.snapshot),
                                    fmt17(pt.stat.value), pt.stat.converged ? "1" : "0",
                                    std::to_string(pt.stat.t_reached),
                                    fmt17(pt.stat.window_spread)});
        out.convergence.push_back(
            stationary_json(pt.set + "_k" + fmt_key(pt.k), pt.stat));
    }
    out.metrics["snapshot_step"] = cfg.n_steps;
}

// ---- fig6: stationary negativity vs epsilon ----------------------------

void run_fig6(const ScenarioConfig& cfg, Outputs& out) {
    struct Branch {
        double k_re;
        double k_im;
    };
    const std::vector<Branch> branches = {{3.0, 0.01}, {3.0, 3.0}, {0.25, 0.01}, {0.25, 3.0}};
    struct Point {
        Branch branch;
        double eps;
        StationaryResult stat;
    };
    std::vector<Point> points;
    for (const auto& br : branches)
        for (double eps : cfg.sweep_grid) points.push_back({br, eps, {}});

    const double p = cfg.p_values.front();
    std::vector<std::function<void()>> tasks;
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt, p] {
            const TopParams tp{cfg.j, pt.branch.k_re, pt.branch.k_im, pt.eps};
            if (pt.eps == 0.0) {
                // uncoupled tops produce no entanglement; skip the long run
                pt.stat = {0.0, true, 0, 0.0};
                return;
            }
            pt.stat = stationary_negativity(tp, cfg.gamma1, cfg.gamma2, p, cfg.convergence);
        });
    }
    run_tasks(tasks, cfg.jobs);

    out.summary_columns = {"k_re",      "k_im",      "epsilon",  "p",
                           "stationary", "converged", "t_reached", "window_spread"};
    for (const auto& pt : points) {
        out.summary_rows.push_back({fmt_key(pt.branch.k_re), fmt_key(pt.branch.k_im),
                                    fmt_key(pt.eps), fmt_key(p), fmt17(pt.stat.value),
                                    pt.stat.converged ? "1" : "0",
                                    std::to_string(pt.stat.t_reached),
                                    fmt17(pt.stat.window_spread)});
        out.convergence.push_back(stationary_json("kre" + fmt_key(pt.branch.k_re) + "_im" +
                                                      fmt_key(pt.branch.k_im) + "_eps" +
                                                      fmt_key(pt.eps),
                                                  pt.stat));
    }

    // Power-law fits over epsilon <= 0.1 for the Re(k)=3 branches.
    for (const auto& br : branches) {
        if (br.k_re != 3.0) continue;
        std::vector<std::pair<double, double>> fit_points;
        for (const auto& pt : points)
            if (pt.branch.k_re == br.k_re && pt.branch.k_im == br.k_im && pt.eps > 0.0 &&
                pt.eps <= 0.1 && pt.stat.value > 0.0)
                fit_points.emplace_back(pt.eps, pt.stat.value);
        if (fit_points.size() >= 3) {
            const PowerLawFit fit = fit_power_law(fit_points);
            out.metrics["power_law_kre3_im" + fmt_key(br.k_im)] = {
                {"exponent", fit.exponent},
                {"prefactor", fit.prefactor},
                {"rms_residual", fit.residual},
                {"n_points", fit_points.size()}};
        }
    }
    double worst_rel = 0.0;
    for (const auto& a : points) {
        if (a.branch.k_re != 3.0 || a.branch.k_im != 0.01 || a.eps <= 0.0 || a.eps > 0.1)
            continue;
        for (const auto& b : points) {
            if (b.branch.k_re != 3.0 || b.branch.k_im != 3.0 || b.eps != a.eps) continue;
            if (a.stat.value > 0.0)
                worst_rel = std::max(worst_rel,
                                     std::abs(b.stat.value - a.stat.value) / a.stat.value);
        }
    }
    out.metrics["im_k_max_rel_deviation_kre3"] = worst_rel;
}

// ---- fig7 / fig8: fidelity decay under a kick perturbation -------------

void run_fidelity_scenario(const ScenarioConfig& cfg, Outputs& out) {
    if (!cfg.k_prime) throw ConfigError("fidelity scenarios require k_prime");
    struct Point {
        double eps;
        double p;
        std::vector<double> values;
    };
    std::vector<Point> points;
    for (double eps : cfg.sweep_grid) {
        auto ps = cfg.p_values;
        std::sort(ps.begin(), ps.end());
        for (double p : ps) points.push_back({eps, p, {}});
    }
    std::vector<std::function<void()>> tasks;
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt] {
            ScenarioConfig local = cfg;
            local.epsilon = pt.eps;
            pt.values = run_fidelity_pair(local, pt.p);
        });
    }
    run_tasks(tasks, cfg.jobs);

    out.summary_columns = {"epsilon", "p",       "k_re",    "k_prime", "n_steps",
                           "min_f",   "t_at_min", "final_f", "max_f_after_100"};
    for (auto& pt : points) {
        SeriesOut s;
        s.key = "fid_eps" + fmt_key(pt.eps) + "_p" + fmt_key(pt.p);
        s.quantity = "fidelity";
        s.meta = {param_line({cfg.j, cfg.k_re, 0.0, pt.eps}, cfg.gamma1, cfg.gamma2, pt.p),
                  "k_prime=" + fmt_key(*cfg.k_prime)};
        s.values = std::move(pt.values);
        const auto min_it = std::min_element(s.values.begin(), s.values.end());
        const auto tail_begin =
            s.values.begin() + std::min<long>(100, static_cast<long>(s.values.size()) - 1);
        const double max_tail = *std::max_element(tail_begin, s.values.end());
        out.summary_rows.push_back({fmt_key(pt.eps), fmt_key(pt.p), fmt_key(cfg.k_re),
                                    fmt_key(*cfg.k_prime), std::to_string(cfg.n_steps),
                                    fmt17(*min_it), std::to_string(min_it - s.values.begin()),
                                    fmt17(s.values.back()), fmt17(max_tail)});
        out.series.push_back(std::move(s));
    }

    // Mixedness sensitivity: largest gap between the p=0 and p=0.5 curves.
    for (double eps : cfg.sweep_grid) {
        const SeriesOut* low = nullptr;
        const SeriesOut* high = nullptr;
        for (const auto& s : out.series) {
            if (s.key == "fid_eps" + fmt_key(eps) + "_p0") low = &s;
            if (s.key == "fid_eps" + fmt_key(eps) + "_p0.5") high = &s;
        }
        if (!low || !high) continue;
        double max_gap = 0.0;
        long t_at = 0;
        double early_gap = 0.0;
        for (size_t t = 0; t < low->values.size(); ++t) {
            const double gap = std::abs(low->values[t] - high->values[t]);
            if (gap > max_gap) {
                max_gap = gap;
                t_at = static_cast<long>(t);
            }
            if (t < 10) early_gap = std::max(early_gap, gap);
        }
        out.metrics["p_divergence_eps" + fmt_key(eps)] = {
            {"max_gap", max_gap}, {"t_at_max", t_at}, {"max_gap_t_lt_10", early_gap}};
    }
}

// ---- custom -------------------------------------------------------------

void run_custom(const ScenarioConfig& cfg, Outputs& out) {
    if (cfg.k_prime) {
        ScenarioConfig local = cfg;
        if (local.sweep_axis.empty()) {
            local.sweep_axis = "epsilon";
            local.sweep_grid = {cfg.epsilon};
        } else if (local.sweep_axis != "epsilon") {
            throw ConfigError("fidelity sweeps support only the epsilon axis");
        }
        run_fidelity_scenario(local, out);
        return;
    }
    ScenarioConfig local = cfg;
    if (local.sweep_axis.empty() || local.sweep_axis == "k_re") {
        if (local.sweep_axis.empty()) local.sweep_grid = {cfg.k_re};
        local.sweep_axis = "k_re";
        run_negativity_series(local, out);
        return;
    }
    // epsilon sweep of negativity trajectories
    struct Point {
        double eps;
        double p;
        EntanglementSeries series;
    };
    std::vector<Point> points;
    for (double eps : cfg.sweep_grid) {
        auto ps = cfg.p_values;
        std::sort(ps.begin(), ps.end());
        for (double p : ps) points.push_back({eps, p, {}});
    }
    std::vector<std::function<void()>> tasks;
    for (auto& pt : points) {
        tasks.emplace_back([&cfg, &pt] {
            const TopParams tp{cfg.j, cfg.k_re, cfg.k_im, pt.eps};
            pt.series = negativity_trajectory(tp, cfg.gamma1, cfg.gamma2, pt.p, cfg.n_steps);
        });
    }
    run_tasks(tasks, cfg.jobs);
    const double ds = delta_s_for(cfg.j, cfg.gamma1, cfg.gamma2);
    out.summary_columns = {"epsilon", "p", "delta_s", "n_steps", "final", "max_value"};
    for (auto& pt : points) {
        SeriesOut s;
        s.key = "neg_eps" + fmt_key(pt.eps) + "_p" + fmt_key(pt.p);
        s.quantity = "log_negativity";
        s.meta = {param_line(pt.series.params, cfg.gamma1, cfg.gamma2, pt.p)};
        s.values = std::move(pt.series.values);
        out.summary_rows.push_back({fmt_key(pt.eps), fmt_key(pt.p), fmt17(ds),
                                    std::to_string(cfg.n_steps), fmt17(s.values.back()),
                                    fmt17(*std::max_element(s.values.begin(), s.values.end()))});
        out.series.push_back(std::move(s));
    }
}

// ---- output assembly ----------------------------------------------------

std::string series_csv(const ScenarioConfig& cfg, const SeriesOut& s) {
    std::string text;
    text.reserve(s.values.size() * 26 + 512);
    text += "# qutop " + std::string(kVersion) + " series\n";
    text += "# scenario: " + cfg.scenario + "\n";
    text += "# key: " + s.key + "\n";
    for (const auto& m : s.meta) text += "# " + m + "\n";
    for (const auto& line : convention_lines()) text += "# " + line + "\n";
    text += "# columns: t," + s.quantity + " (t is the kick counter; floats carry 17 "
            "significant digits)\n";
    text += "t," + s.quantity + "\n";
    for (size_t t = 0; t < s.values.size(); ++t)
        text += std::to_string(t) + "," + fmt17(s.values[t]) + "\n";
    return text;
}

std::string summary_csv(const ScenarioConfig& cfg, const Outputs& out) {
    std::string text = "# qutop " + std::string(kVersion) + " summary\n";
    text += "# scenario: " + cfg.scenario + "\n";
    for (const auto& line : convention_lines()) text += "# " + line + "\n";
    std::string head;
    for (const auto& c : out.summary_columns) {
        if (!head.empty()) head += ",";
        head += c;
    }
    text += "# columns: " + head + "\n" + head + "\n";
    for (const auto& row : out.summary_rows) {
        std::string line;
        for (const auto& cell : row) {
            if (!line.empty()) line += ",";
            line += cell;
        }
        text += line + "\n";
    }
    return text;
}

} // namespace

std::vector<double> run_fidelity_pair(const ScenarioConfig& cfg, double p) {
    if (!cfg.k_prime) throw ConfigError("run_fidelity_pair requires k_prime");
    if (cfg.k_im != 0.0) throw ConfigError("fidelity pairs require Hermitian dynamics (k_im = 0)");
    const FloquetOperator op1 = build_floquet({cfg.j, cfg.k_re, 0.0, cfg.epsilon});
    const FloquetOperator op2 = build_floquet({cfg.j, *cfg.k_prime, 0.0, cfg.epsilon});
    DensityMatrix rho1 = initial_density(cfg.j, cfg.gamma1, cfg.gamma2, p);
    DensityMatrix rho2 = rho1;
    std::vector<double> values;
    values.reserve(static_cast<size_t>(cfg.n_steps) + 1);
    values.push_back(fidelity(rho1, rho2));
    for (long t = 1; t <= cfg.n_steps; ++t) {
        rho1 = step(rho1, op1, false);
        rho2 = step(rho2, op2, false);
        values.push_back(fidelity(rho1, rho2));
    }
    return values;
}

RunRecord run_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();

    Outputs out;
    if (cfg.scenario == "fig1" || cfg.scenario == "fig4") {
        run_negativity_series(cfg, out);
    } else if (cfg.scenario == "fig2") {
        run_eta_sets(cfg, fig2_sets(cfg), out, /*emit_series=*/true);
    } else if (cfg.scenario == "fig3") {
        run_fig3(cfg, out);
    } else if (cfg.scenario == "fig5") {
        run_fig5(cfg, out);
    } else if (cfg.scenario == "fig6") {
        run_fig6(cfg, out);
    } else if (cfg.scenario == "fig7" || cfg.scenario == "fig8") {
        run_fidelity_scenario(cfg, out);
    } else {
        run_custom(cfg, out);
    }

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir);

    std::sort(out.series.begin(), out.series.end(),
              [](const SeriesOut& a, const SeriesOut& b) { return a.key < b.key; });

    json series_index = json::array();
    for (const auto& s : out.series) {
        const std::string file = s.key + ".csv";
        write_file_atomic(fs::path(cfg.out_dir) / file, series_csv(cfg, s));
        series_index.push_back({{"key", s.key}, {"file", file}});
    }
    write_file_atomic(fs::path(cfg.out_dir) / "summary.csv", summary_csv(cfg, out));

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunRecord record;
    record.document = {{"tool", "qutop"},
                       {"version", kVersion},
                       {"scenario", cfg.scenario},
                       {"config", config_to_json(cfg)},
                       {"conventions", conventions_json()},
                       {"series", series_index},
                       {"summary_file", "summary.csv"},
                       {"summary_columns", out.summary_columns},
                       {"metrics", out.metrics},
                       {"convergence", out.convergence},
                       {"wall_clock_seconds", elapsed}};
    write_file_atomic(fs::path(cfg.out_dir) / "run.json", record.document.dump(2) + "\n");
    return record;
}

} // namespace qutop
