#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cascade/emit.hpp"

using namespace cascade;

namespace {

std::string scenario_path(const std::string& name) { return std::string(CASCADE_SCENARIO_DIR) + "/" + name + ".toml"; }

std::string error_of(const std::string& text) {
    try {
        validate(parse_config_string(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, RoundTripBuiltins) {
    for (auto name : {"z_condensation", "y_explicit"}) {
        auto c = builtin_scenario(name);
        auto back = parse_config_string(to_toml(c));
        EXPECT_EQ(config_difference(c, back), "") << name;
        EXPECT_EQ(to_toml(back), to_toml(c));
    }
    EXPECT_THROW(builtin_scenario("nope"), ConfigError);
}

TEST(Config, RoundTripScenarioFiles) {
    for (auto& e : std::filesystem::directory_iterator(CASCADE_SCENARIO_DIR)) {
        if (e.path().extension() != ".toml") continue;
        auto c = load_config(e.path().string());
        validate(c);
        auto back = parse_config_string(to_toml(c));
        EXPECT_EQ(config_difference(c, back), "") << e.path();
    }
}

TEST(Config, ScenarioFilesMirrorBuiltins) {
    for (auto name : {"z_condensation", "y_explicit"}) {
        auto file = load_config(scenario_path(name));
        EXPECT_EQ(config_difference(builtin_scenario(name), file), "") << name;
    }
}

TEST(Config, FieldPreciseErrors) {
    EXPECT_NE(error_of("s = 0.5\n").find("s:"), std::string::npos);
    EXPECT_NE(error_of("[outputs]\nbands = [[5, 2]]\n").find("outputs.bands"), std::string::npos);
    EXPECT_NE(error_of("[outputs]\nbands = [[0, 4], [4, 8]]\n").find("overlap"), std::string::npos);
    EXPECT_NE(error_of("[integrator]\nrel_tol = -1.0\n").find("integrator.rel_tol"), std::string::npos);
    EXPECT_NE(error_of("[integrator]\nbogus = 1\n").find("integrator.bogus"), std::string::npos);
    EXPECT_NE(error_of("frobnicate = 1\n").find("frobnicate"), std::string::npos);
    EXPECT_NE(error_of("family = \"Q\"\n"), "");
    EXPECT_NE(error_of("family = \"SzegoCubic\"\npipeline = \"analytic\"\ns = 1.0\n"), "");
    EXPECT_NE(error_of("L = [1]\n").find("L"), std::string::npos);
    EXPECT_NE(error_of("s = \n"), "");  // parse error carries a location
}

TEST(Config, DefaultsValidate) {
    EXPECT_EQ(error_of(""), "");
    EXPECT_NE(error_of("[outputs]\nbands = []\n").find("outputs.bands"), std::string::npos);
}

TEST(Config, Fmt17RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 0.4835910716123625, -1e-300, 6.02e23, 0.0}) EXPECT_EQ(std::stod(fmt17(v)), v);
}

TEST(Config, RunIsDeterministic) {
    auto c = load_config(scenario_path("z_random_short"));
    c.seed = 11;
    auto a = run_scenario(c), b = run_scenario(c);
    // Compared as text: NaN cells compare unequal as doubles.
    auto text = [](const ScenarioResult& r) {
        std::ostringstream os;
        write_timeseries_csv(os, r);
        write_spectrum_csv(os, r);
        return os.str();
    };
    EXPECT_EQ(text(a), text(b));
    EXPECT_EQ(summary_json(a.summary).dump(), summary_json(b.summary).dump());
    c.seed = 12;
    auto d = run_scenario(c);
    EXPECT_NE(a.ts_rows.front(), d.ts_rows.front());
}

TEST(Config, SummaryKeys) {
    auto r = run_scenario(builtin_scenario("z_condensation"));
    auto j = summary_json(r.summary);
    std::vector<std::string> keys;
    for (auto& [k, _] : j.items()) keys.push_back(k);
    const std::vector<std::string> want{"family", "s", "N", "E", "S", "classification",
                                        "T_estimate", "gamma", "sobolev_exponents", "drift"};
    EXPECT_EQ(keys, want);
    EXPECT_EQ(j["drift"].size(), 3u);
    EXPECT_EQ(j["classification"], "cascade_finite_T");
    EXPECT_TRUE(r.all_checks_pass());
}
