// cascade-lab: scenario-driven front end for the resonant-system library.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/emit.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kCheckFailed = 2, kRuntime = 3 };

struct Globals {
    std::string config;
    std::string out = "cascade_out";
    bool check = false;
    long long seed = -1;
    int threads = 1;
};

int report(const cascade::ScenarioResult& r, const Globals& g) {
    std::cout << "scenario " << r.config.name << ": pipeline " << cascade::to_string(r.config.pipeline) << ", stop "
              << cascade::to_string(r.stop) << ", classification " << r.summary.classification << "\n";
    if (r.summary.gamma) std::cout << "gamma " << cascade::fmt17(*r.summary.gamma) << "\n";
    for (auto [xi, v] : r.summary.sobolev_exponents)
        std::cout << "sobolev_exponent(" << cascade::fmt17(xi) << ") " << cascade::fmt17(v) << "\n";
    if (r.summary.max_deviation) std::cout << "max_deviation " << cascade::fmt17(*r.summary.max_deviation) << "\n";
    for (const auto& f : cascade::emit(r, g.out)) std::cout << "wrote " << g.out << "/" << f << "\n";
    if (r.stop == cascade::StopReason::StepUnderflow) {
        std::cerr << "error: step size underflow\n";
        return kRuntime;
    }
    if (!g.check) return kOk;
    for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    return r.all_checks_pass() ? kOk : kCheckFailed;
}

cascade::ScenarioConfig resolve(const Globals& g, const std::string& positional, const std::string& scenario) {
    cascade::ScenarioConfig c;
    const std::string path = !positional.empty() ? positional : g.config;
    if (!path.empty() && !scenario.empty()) throw cascade::ConfigError("give either a config file or --scenario");
    if (!path.empty()) c = cascade::load_config(path);
    else if (!scenario.empty()) c = cascade::builtin_scenario(scenario);
    else throw cascade::ConfigError("no configuration: pass --config PATH or --scenario NAME");
    if (g.seed >= 0) c.seed = static_cast<std::uint64_t>(g.seed);
    return c;
}

// Minimal reader for the CSV files this tool writes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw cascade::ConfigError("column '" + name + "' missing");
    }
};

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cascade::ConfigError("cannot open '" + path + "'");
    Table t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw cascade::ConfigError("'" + path + "' is empty");
    t.header = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    return t;
}

double to_d(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascade-lab: resonant cascade scenarios, fits and classification"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Scenario TOML file");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--check", g.check, "Evaluate the scenario's [check] assertions; exit 2 if any fails");
    app.add_option("--seed", g.seed, "Seed override for randomized sources")->check(CLI::NonNegativeNumber);
    app.add_option("--threads", g.threads, "Worker threads (sweep)")->check(CLI::PositiveNumber);
    app.fallthrough();

    auto* run = app.add_subcommand("run", "Run a scenario and write its tables");
    std::string run_path, run_scenario;
    run->add_option("config_file", run_path, "Scenario TOML file");
    run->add_option("--scenario", run_scenario, "Built-in scenario name");

    auto* classify = app.add_subcommand("classify", "Classify manifold motion from invariants");
    std::string cl_family = "Z";
    double cl_s = 2.0, cl_N = 1.0, cl_E = 0.5, cl_S = 0.0;
    classify->add_option("--family", cl_family, "Z or Y")->required();
    classify->add_option("--s", cl_s, "Family parameter s")->required();
    classify->add_option("--N", cl_N, "Particle number")->required();
    classify->add_option("--E", cl_E, "Energy")->required();
    classify->add_option("--S", cl_S, "Conserved S")->required();

    auto* compare = app.add_subcommand("compare", "Full system against the closed form");
    std::string cmp_scenario;
    std::optional<double> cmp_s, cmp_frac;
    std::optional<int> cmp_L;
    compare->add_option("--scenario", cmp_scenario, "Built-in scenario name");
    compare->add_option("--s", cmp_s, "Override s");
    compare->add_option("--L", cmp_L, "Override truncation L");
    compare->add_option("--t-frac", cmp_frac, "Compare on t <= frac * T");

    auto* fit = app.add_subcommand("fit", "Fit spectra and Sobolev rates from emitted tables");
    std::string fit_spectrum, fit_timeseries, fit_family = "Z";
    int fit_nmin = 32, fit_nmax = 200;
    std::optional<double> fit_logq, fit_T;
    double fit_k = 4.0;
    fit->add_option("--spectrum", fit_spectrum, "spectrum.csv; the last snapshot is fitted");
    fit->add_option("--timeseries", fit_timeseries, "timeseries.csv for Sobolev rates");
    fit->add_option("--family", fit_family, "Z or Y (selects the Sobolev convention)");
    fit->add_option("--n-min", fit_nmin, "First mode of the power-law window");
    fit->add_option("--n-max", fit_nmax, "Last mode of the power-law window");
    fit->add_option("--log-q", fit_logq, "log(x/xc) of the snapshot; default fits the geometric rate");
    fit->add_option("--T", fit_T, "Blow-up time; default extrapolates from x_over_xc");
    fit->add_option("--defect-power", fit_k, "Exponent k in 1 - x/xc ~ (T - t)^k for T extrapolation");

    auto* sweep = app.add_subcommand("sweep", "Classification table over an (E, S) grid");
    double sw_s = 2.0, sw_N = 2.0;
    int sw_nE = 50, sw_nS = 50;
    std::string sw_family = "Y";
    sweep->add_option("--family", sw_family, "Manifold family (Y)");
    sweep->add_option("--s", sw_s, "Family parameter s");
    sweep->add_option("--N", sw_N, "Particle number");
    sweep->add_option("--nE", sw_nE, "Grid points in E")->check(CLI::Range(2, 100000));
    sweep->add_option("--nS", sw_nS, "Grid points in S")->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*run) return report(cascade::run_scenario(resolve(g, run_path, run_scenario)), g);

        if (*compare) {
            cascade::ScenarioConfig c = resolve(g, "", cmp_scenario);
            c.pipeline = cascade::Pipeline::Compare;
            if (cmp_s) c.s = *cmp_s;
            if (cmp_L) c.L = *cmp_L;
            if (cmp_frac) c.outputs.compare_t_frac = *cmp_frac;
            if (!cmp_L && c.L > 64) c.L = 64;
            // Keep the scenario's bands that still fit under the new truncation.
            std::vector<std::pair<int, int>> bands;
            for (auto [lo, hi] : c.outputs.bands)
                if (lo <= c.L) bands.emplace_back(lo, std::min(hi, c.L));
            c.outputs.bands = bands;
            c.check.gamma.reset();
            c.check.amplitude.reset();
            c.check.sobolev.clear();
            if (!c.check.deviation_max) c.check.deviation_max = 1e-6;
            return report(cascade::run_scenario(c), g);
        }

        if (*classify) {
            cascade::ScenarioConfig c;
            c.name = "classify";
            c.family = cascade::family_from_string(cl_family);
            c.s = cl_s;
            c.pipeline = cascade::Pipeline::Classify;
            c.source.kind = cascade::SourceKind::Invariants;
            c.source.N = cl_N;
            c.source.E = cl_E;
            c.source.S = cl_S;
            cascade::validate(c);
            auto r = cascade::run_classify(c);
            std::cout << r.summary.classification << "\n";
            return kOk;
        }

        if (*fit) {
            if (fit_spectrum.empty() && fit_timeseries.empty())
                throw cascade::ConfigError("fit needs --spectrum and/or --timeseries");
            const auto mfam = cascade::manifold_family_of(cascade::family_from_string(fit_family));
            nlohmann::ordered_json j;
            if (!fit_spectrum.empty()) {
                Table t = read_csv(fit_spectrum);
                const int ct = t.col("t"), cn = t.col("n"), cm = t.col("modsq");
                const std::string last = t.rows.back()[ct];
                std::vector<double> msq;
                for (auto& row : t.rows)
                    if (row[ct] == last) {
                        const auto n = static_cast<std::size_t>(std::stoul(row[cn]));
                        if (msq.size() <= n) msq.resize(n + 1, 0.0);
                        msq[n] = to_d(row[cm]);
                    }
                cascade::PowerlawOptions opt;
                opt.n_max = fit_nmax;
                opt.subleading = 2;
                if (fit_logq) opt.log_q = *fit_logq;
                else opt.fit_geometric = true;
                auto fr = cascade::powerlaw_fit(msq, fit_nmin, opt);
                j["t"] = to_d(last);
                j["gamma"] = fr.exponent;
                j["amplitude"] = fr.amplitude;
                j["window"] = {fr.lo, fr.hi};
                j["rms"] = fr.rms;
            }
            if (!fit_timeseries.empty()) {
                Table t = read_csv(fit_timeseries);
                const int ct = t.col("t");
                std::vector<double> tt;
                for (auto& row : t.rows) tt.push_back(to_d(row[ct]));
                double T;
                if (fit_T) {
                    T = *fit_T;
                } else {
                    const int cq = t.col("x_over_xc");
                    std::vector<double> ts, ds;
                    const std::size_t m = t.rows.size(), m0 = m - std::min<std::size_t>(m, 12);
                    for (std::size_t i = m0; i < m; ++i) {
                        ts.push_back(tt[i]);
                        ds.push_back(1.0 - to_d(t.rows[i][cq]));
                    }
                    T = cascade::estimate_blowup_time(ts, ds, fit_k);
                }
                j["T_estimate"] = T;
                nlohmann::ordered_json so = nlohmann::ordered_json::object();
                for (std::size_t c = 0; c < t.header.size(); ++c) {
                    const std::string& h = t.header[c];
                    if (h.rfind("H^", 0) != 0) continue;
                    const double xi = std::stod(h.substr(2));
                    std::vector<double> v;
                    for (auto& row : t.rows) {
                        const double x = to_d(row[c]);
                        v.push_back(mfam == cascade::ManifoldFamily::Y ? x * x : x);
                    }
                    auto [lt, lv] = cascade::last_decade(tt, v, T);
                    so[cascade::fmt17(xi)] = cascade::blowup_rate_fit(lt, lv, T, cascade::RateKind::Power).exponent;
                }
                j["sobolev_exponents"] = so;
            }
            std::cout << j.dump(2) << "\n";
            std::filesystem::create_directories(g.out);
            std::ofstream(std::filesystem::path(g.out) / "fit.json") << j.dump(2) << "\n";
            return kOk;
        }

        if (*sweep) {
            if (cascade::family_from_string(sw_family) != cascade::Family::Y)
                throw cascade::ConfigError("sweep: only family Y has an (E, S) cascade window");
            auto grid = cascade::default_sweep(sw_s, sw_N, sw_nE, sw_nS, g.threads);
            auto topo = cascade::sweep_topology(grid);
            std::filesystem::create_directories(g.out);
            {
                std::ofstream out(std::filesystem::path(g.out) / "sweep.csv", std::ios::binary);
                if (!out) throw std::runtime_error("cannot write sweep.csv");
                cascade::write_sweep_csv(out, grid);
            }
            nlohmann::ordered_json j{{"family", sw_family},
                                     {"s", sw_s},
                                     {"N", sw_N},
                                     {"cascade_cells", topo.cascade_cells},
                                     {"components", topo.components},
                                     {"inside_sign_violations", topo.inside_sign_violations},
                                     {"outside_sign_violations", topo.outside_sign_violations},
                                     {"bound_violations", topo.bound_violations}};
            std::ofstream(std::filesystem::path(g.out) / "sweep_summary.json") << j.dump(2) << "\n";
            std::cout << j.dump(2) << "\nwrote " << g.out << "/sweep.csv\n";
            if (g.check) {
                std::cout << (topo.ok() ? "PASS" : "FAIL") << " sweep topology\n";
                return topo.ok() ? kOk : kCheckFailed;
            }
            return kOk;
        }
    } catch (const cascade::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kValidation;
    } catch (const cascade::DomainError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const cascade::StepUnderflow& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
