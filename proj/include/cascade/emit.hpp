#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cascade/config.hpp"
#include "cascade/scenario.hpp"

namespace cascade {

namespace detail {

inline nlohmann::json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline nlohmann::json opt_or_null(const std::optional<double>& v) { return v ? num_or_null(*v) : nlohmann::json(nullptr); }

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

}  // namespace detail

inline nlohmann::ordered_json summary_json(const Summary& s) {
    using detail::num_or_null;
    using detail::opt_or_null;
    nlohmann::ordered_json j;
    j["family"] = s.family;
    j["s"] = num_or_null(s.s);
    j["N"] = num_or_null(s.N);
    j["E"] = num_or_null(s.E);
    j["S"] = num_or_null(s.S);
    j["classification"] = s.classification;
    j["T_estimate"] = opt_or_null(s.T_estimate);
    j["gamma"] = opt_or_null(s.gamma);
    nlohmann::ordered_json so = nlohmann::ordered_json::object();
    for (auto [xi, v] : s.sobolev_exponents) so[fmt17(xi)] = num_or_null(v);
    j["sobolev_exponents"] = so;
    if (s.drift) j["drift"] = {{"N", num_or_null(s.drift->N)}, {"E", num_or_null(s.drift->E)}, {"H", num_or_null(s.drift->H)}};
    else j["drift"] = nullptr;
    return j;
}

inline void write_timeseries_csv(std::ostream& out, const ScenarioResult& r) {
    out << "t";
    for (auto& c : r.ts_columns) out << "," << c;
    out << "\n";
    for (auto& row : r.ts_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
        out << "\n";
    }
}

inline void write_spectrum_csv(std::ostream& out, const ScenarioResult& r) {
    out << "t,n,modsq,phase\n";
    for (auto& [t, a] : r.spectra)
        for (std::size_t n = 0; n < a.size(); ++n)
            out << fmt17(t) << "," << n << "," << fmt17(std::norm(a[n])) << "," << fmt17(std::arg(a[n])) << "\n";
}

inline void write_position_csv(std::ostream& out, const ScenarioResult& r) {
    out << "t,theta,re_u,im_u\n";
    for (auto& [t, u] : r.positions)
        for (std::size_t j = 0; j < u.size(); ++j)
            out << fmt17(t) << "," << fmt17(2.0 * kPi * j / u.size()) << "," << fmt17(u[j].real()) << ","
                << fmt17(u[j].imag()) << "\n";
}

inline void write_bands_csv(std::ostream& out, const ScenarioResult& r) {
    out << "t,n_lo,n_hi,N_band,E_band\n";
    const auto& b = r.config.outputs.bands;
    for (auto& [t, sums] : r.bands)
        for (std::size_t k = 0; k < sums.size(); ++k)
            out << fmt17(t) << "," << b[k].first << "," << b[k].second << "," << fmt17(sums[k].N) << ","
                << fmt17(sums[k].E) << "\n";
}

inline void write_deviation_csv(std::ostream& out, const ScenarioResult& r) {
    out << "t,deviation\n";
    for (auto [t, d] : r.deviation) out << fmt17(t) << "," << fmt17(d) << "\n";
}

/// Writes every table the result carries into dir; returns the file names written.
inline std::vector<std::string> emit(const ScenarioResult& r, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto put = [&](const std::string& name, auto&& writer) {
        auto out = detail::open_out(dir / name);
        writer(out);
        files.push_back(name);
    };
    if (!r.ts_rows.empty()) put("timeseries.csv", [&](std::ostream& o) { write_timeseries_csv(o, r); });
    if (!r.spectra.empty()) put("spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(o, r); });
    if (!r.positions.empty()) put("position.csv", [&](std::ostream& o) { write_position_csv(o, r); });
    if (!r.bands.empty()) put("bands.csv", [&](std::ostream& o) { write_bands_csv(o, r); });
    if (!r.deviation.empty()) put("deviation.csv", [&](std::ostream& o) { write_deviation_csv(o, r); });
    put("summary.json", [&](std::ostream& o) { o << summary_json(r.summary).dump(2) << "\n"; });
    put("config.toml", [&](std::ostream& o) { o << to_toml(r.config); });
    return files;
}

inline void write_sweep_csv(std::ostream& out, const SweepGrid& g) {
    out << "E,S,classification,V_Fc,S_minus,S_plus\n";
    for (auto& c : g.cells)
        out << fmt17(c.E) << "," << fmt17(c.S) << "," << c.classification << "," << fmt17(c.V_Fc) << ","
            << fmt17(c.S_minus) << "," << fmt17(c.S_plus) << "\n";
}

}  // namespace cascade
