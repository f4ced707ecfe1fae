#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nanoqed/analysis/population.hpp"
#include "nanoqed/io/csv.hpp"
#include "nanoqed/scenario/config.hpp"
#include "nanoqed/scenario/runner.hpp"

using namespace nanoqed;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("nanoqed_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string l;
    std::getline(in, l);
    return l;
}

std::string config_error(const std::string& text) {
    try {
        scenario::parse_config(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Csv, HeaderCarriesSchemaVersionAndKind) {
    const auto d = temp_dir("header");
    io::write_fit_csv((d / "fit.csv").string(), fit::sphere_kernel_h2nm(), {{"model", "h2nm"}});
    EXPECT_EQ(first_line(d / "fit.csv"), "# nanoqed-csv/1 fit");
    const auto text = slurp(d / "fit.csv");
    EXPECT_NE(text.find("# model=h2nm\n"), std::string::npos);
    EXPECT_NE(text.find("A_THz2,B_eV,Omega_eV\n"), std::string::npos);
}

TEST(Csv, FitTableRoundTrips) {
    const auto d = temp_dir("roundtrip");
    const auto set = fit::npom_kernel();
    io::write_fit_csv((d / "npom.csv").string(), set);
    const auto back = io::read_lorentzian_csv((d / "npom.csv").string());
    ASSERT_EQ(back.size(), set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        EXPECT_NEAR(back.terms[i].area, set.terms[i].area, 1e-15 * set.terms[i].area);
        EXPECT_EQ(back.terms[i].half_width, set.terms[i].half_width);
        EXPECT_EQ(back.terms[i].center, set.terms[i].center);
    }
}

TEST(Csv, BundledTablesMatchBuiltInSets) {
    const auto h2 = io::read_lorentzian_csv(std::string(NANOQED_DATA_DIR) + "/sphere_h2nm.csv");
    const auto npom = io::read_lorentzian_csv(std::string(NANOQED_DATA_DIR) + "/npom.csv");
    EXPECT_NEAR(h2.total_area(), fit::sphere_kernel_h2nm().total_area(), 1e-15);
    EXPECT_NEAR(npom.total_area(), fit::npom_kernel().total_area(), 1e-15);
    EXPECT_EQ(npom.size(), 10u);
}

TEST(Ingest, RescaleByQuarterForEpsB4) {
    const auto d = temp_dir("ingest");
    const auto p = write_file(d / "j.csv", "energy,J\n1.0,4.0\n1.5,8.0\n2.0,2.0\n");
    const auto k = io::ingest_tabulated_kernel(p, 4.0);
    EXPECT_DOUBLE_EQ(k.values[0], 1.0);
    EXPECT_DOUBLE_EQ(k.values[1], 2.0);
    EXPECT_DOUBLE_EQ(k.values[2], 0.5);
}

TEST(Ingest, NoRescaleIsIdentity) {
    const auto d = temp_dir("ingest_id");
    const auto p = write_file(d / "k.txt", "# comment\n1.0 0.25\n1.5 0.5\n2.0 0.125\n");
    const auto k = io::ingest_tabulated_kernel(p);
    EXPECT_EQ(k.values, (std::vector<double>{0.25, 0.5, 0.125}));
    EXPECT_EQ(k.grid[1], 1.5);
}

TEST(Ingest, DuplicateEnergyRejected) {
    const auto d = temp_dir("ingest_dup");
    const auto p = write_file(d / "k.csv", "1.0,1\n1.5,2\n1.5,3\n2.0,1\n");
    EXPECT_THROW(io::ingest_tabulated_kernel(p), ConfigError);
}

TEST(Ingest, DecreasingEnergyRejected) {
    const auto d = temp_dir("ingest_dec");
    const auto p = write_file(d / "k.csv", "1.0,1\n2.0,2\n1.5,3\n");
    EXPECT_THROW(io::ingest_tabulated_kernel(p), ConfigError);
}

TEST(Ingest, MalformedRowReportsLine) {
    const auto d = temp_dir("ingest_bad");
    const auto p = write_file(d / "k.csv", "E,K\n1.0,1\n1.5,abc\n");
    try {
        io::ingest_tabulated_kernel(p);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
}

TEST(Ingest, NegativeValueRejected) {
    const auto d = temp_dir("ingest_neg");
    const auto p = write_file(d / "k.csv", "1.0,1\n1.5,-2\n");
    EXPECT_THROW(io::ingest_tabulated_kernel(p), ConfigError);
}

TEST(Config, MinimalConfigParses) {
    const auto c = scenario::parse_config(nlohmann::json::parse(
        R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "omega_e_eV": 2.75, "t_max_fs": 100}]})"));
    ASSERT_EQ(c.runs.size(), 1u);
    EXPECT_EQ(c.runs[0].model, "m");
    EXPECT_EQ(c.runs[0].config.omega_e, 2.75);
    EXPECT_EQ(c.runs[0].config.t_max, 100.0);
    EXPECT_EQ(c.runs[0].solver, "laplace");
}

TEST(Config, UnknownFieldNamesItsPath) {
    const auto e = config_error(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "omega_eV": 2.9}]})");
    EXPECT_NE(e.find("runs[0].omega_eV"), std::string::npos) << e;
}

TEST(Config, WrongTypeNamesItsPath) {
    const auto e = config_error(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "t_max_fs": "long"}]})");
    EXPECT_NE(e.find("runs[0].t_max_fs"), std::string::npos) << e;
}

TEST(Config, BadChoiceListsAlternatives) {
    const auto e = config_error(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "solver": "rk4"}]})");
    EXPECT_NE(e.find("runs[0].solver"), std::string::npos) << e;
    EXPECT_NE(e.find("volterra"), std::string::npos) << e;
}

TEST(Config, ModelNeedsExactlyOneSource) {
    EXPECT_NE(config_error(R"({"models": {"m": {"table": "h2nm", "file": "x.csv"}}})").find("models.m"), std::string::npos);
    EXPECT_NE(config_error(R"({"models": {"m": {}}})").find("models.m"), std::string::npos);
}

TEST(Config, UnknownModelReferenceRejected) {
    const auto e = config_error(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "model": "x"}]})");
    EXPECT_NE(e.find("unknown model"), std::string::npos) << e;
}

TEST(Config, NegativeTimeStepRejected) {
    const auto e = config_error(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "r", "dt_fs": -0.1}]})");
    EXPECT_NE(e.find("runs[0].dt_fs"), std::string::npos) << e;
}

TEST(Config, OverridesApplyToEveryRunAndChangeHash) {
    auto doc = nlohmann::json::parse(R"({"models": {"m": {"table": "h2nm"}}, "runs": [{"id": "a"}, {"id": "b", "dt_fs": 0.1}]})");
    const auto h0 = scenario::config_hash(doc);
    scenario::Overrides ov;
    ov.dt = 0.02;
    ov.solver = "both";
    scenario::apply_overrides(doc, ov);
    const auto c = scenario::parse_config(doc);
    for (const auto& r : c.runs) {
        EXPECT_EQ(r.config.dt, 0.02);
        EXPECT_EQ(r.solver, "both");
    }
    EXPECT_NE(scenario::config_hash(c.canonical), h0);
}

TEST(Config, HashIsStableAndKeyOrderIndependent) {
    const auto a = nlohmann::json::parse(R"({"threads": 2, "scenario": "x"})");
    const auto b = nlohmann::json::parse(R"({"scenario": "x", "threads": 2})");
    EXPECT_EQ(scenario::config_hash(a), scenario::config_hash(b));
    EXPECT_EQ(scenario::config_hash(a).size(), 16u);
}

TEST(Config, AllPresetsParse) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(NANOQED_PRESET_DIR)) {
        if (e.path().extension() != ".json") continue;
        EXPECT_NO_THROW(scenario::load_config(e.path())) << e.path();
        ++n;
    }
    EXPECT_EQ(n, 8u);
}

TEST(Population, MonotoneDecayIsNotOscillatory) {
    dynamics::AmplitudeTrace tr;
    for (int n = 0; n <= 3000; ++n) {
        const double t = 0.1 * n;
        tr.times.push_back(t);
        // shallow fast ripple on top of a decay
        tr.c_e0.push_back(std::sqrt(std::exp(-t / 80.0) * (1.0 + 0.05 * std::cos(1.4 * t))));
    }
    const auto r = analysis::population_regime(tr);
    EXPECT_FALSE(r.oscillatory);
}

TEST(Population, DampedRabiOscillationPeriod) {
    dynamics::AmplitudeTrace tr;
    const double T = 14.0;
    for (int n = 0; n <= 3000; ++n) {
        const double t = 0.1 * n;
        tr.times.push_back(t);
        tr.c_e0.push_back(std::exp(-t / 60.0) * std::cos(std::numbers::pi * t / T));
    }
    const auto r = analysis::population_regime(tr);
    ASSERT_TRUE(r.oscillatory);
    EXPECT_NEAR(*r.period, T, 0.05);
}

TEST(Runner, SameConfigGivesIdenticalOutputs) {
    const auto doc = nlohmann::json::parse(R"({
        "models": {"m": {"table": "h2nm"}},
        "runs": [{"id": "r", "t_max_fs": 50, "spectrum": {"t_max_fs": 200, "dt_fs": 0.5}}]
    })");
    const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
    {
        scenario::Runner a(scenario::parse_config(doc), d1);
        a.do_evolve();
        a.write_manifest("test");
    }
    {
        auto c = scenario::parse_config(doc);
        c.threads = 3;
        scenario::Runner b(c, d2);
        b.do_evolve();
        b.write_manifest("test");
    }
    for (const auto* f : {"traces_r_laplace.csv", "expsum_r.csv", "spectrum_r.csv"}) {
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    }
    const auto m = nlohmann::json::parse(slurp(d1 / "manifest.json"));
    EXPECT_EQ(m["config_hash"], scenario::config_hash(doc));
    EXPECT_EQ(m["outputs"].size(), 3u);
}
