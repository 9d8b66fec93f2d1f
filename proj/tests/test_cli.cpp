#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hipandas/cli.hpp"
#include "hipandas/degrade.hpp"
#include "hipandas/prior.hpp"

using namespace hipandas;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const char* sub) const { return (path / sub).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

cli::ExperimentConfig phantom_config(const std::string& phantom_path) {
    cli::ExperimentConfig cfg;
    cfg.hrhs = phantom_path;
    cfg.ratio = 2;
    cfg.noise.kind = degrade::NoiseKind::gaussian_iid;
    cfg.noise.sigma = 10.0;
    cfg.has_noise = true;
    cfg.arch.channels = 8;
    cfg.arch.rank_gdn = 2;
    cfg.arch.rank_gsrn = 3;
    cfg.train.stage1_epochs = 0;
    cfg.train.stage2_epochs = 0;
    return cfg;
}

} // namespace

TEST_CASE("phantom generation is deterministic, unit-scaled and low-rank") {
    TempDir dir("hipandas_cli_phantom");
    const std::string a = dir / "a.hicube";
    const std::string b = dir / "b.hicube";
    cli::cmd_make_phantom(32, 32, 8, 3, 123, a);
    cli::cmd_make_phantom(32, 32, 8, 3, 123, b);
    CHECK(slurp(a) == slurp(b));

    const HsiCube h = read_cube(a);
    CHECK(h.unit_scaled);
    for (size_t i = 0; i < h.size(); ++i) {
        CHECK(h.data()[i] >= 0.0f);
        CHECK(h.data()[i] <= 1.0f);
    }
    // rank-3 construction: detail energy saturates by k = 3
    const auto curve = prior::energy_curve(prior::detail_map(h, 2));
    CHECK(curve[2] >= 0.9);
}

TEST_CASE("different phantom seeds give different cubes") {
    const HsiCube a = cli::make_phantom(16, 16, 4, 2, 1);
    const HsiCube b = cli::make_phantom(16, 16, 4, 2, 2);
    CHECK_FALSE(a == b);
}

TEST_CASE("make_phantom validates rank against bands") {
    CHECK_THROWS_AS(cli::make_phantom(8, 8, 4, 4, 0), ConfigError);
}

TEST_CASE("simulate with zero noise reproduces the plain downsample") {
    TempDir dir("hipandas_cli_sim");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 7, hp);
    auto cfg = phantom_config(hp);
    cfg.noise.sigma = 0.0;
    const auto out = cli::cmd_simulate(cfg, 5, dir / "sim");
    const HsiCube n = read_cube(out.n_path);
    CHECK(n == degrade::downsample(read_cube(hp), 2));
    const PanImage q = read_pan(out.q_path);
    CHECK(q.height() == 8);
}

TEST_CASE("a manifest-described simulation reproduces bit-identically") {
    TempDir dir("hipandas_cli_sim2");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 9, hp);
    const auto cfg = phantom_config(hp);
    const auto out1 = cli::cmd_simulate(cfg, 42, dir / "s1");
    const auto out2 = cli::cmd_simulate(cfg, 42, dir / "s2");
    CHECK(slurp(out1.n_path) == slurp(out2.n_path));
    CHECK(slurp(out1.p_path) == slurp(out2.p_path));
    CHECK(slurp(out1.q_path) == slurp(out2.q_path));

    // the manifest records the effective seed
    const auto manifest = nlohmann::json::parse(slurp(out1.manifest_path));
    CHECK(manifest["noise"]["seed"].get<uint64_t>() == 42);
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest.contains("config_hash"));
}

TEST_CASE("zero-epoch restore emits the full output set") {
    TempDir dir("hipandas_cli_restore");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 11, hp);
    const auto cfg = phantom_config(hp);
    const auto out = cli::cmd_restore(cfg, 3, dir / "run");
    CHECK(fs::exists(out.l_hat_path));
    CHECK(fs::exists(out.h_hat_path));
    CHECK(fs::exists(out.trace_path));
    CHECK(fs::exists(out.state_path));
    CHECK(fs::exists(out.manifest_path));
    CHECK(fs::exists(fs::path(dir / "run") / "preview_l_hat.png"));
    CHECK(fs::exists(fs::path(dir / "run") / "preview_h_hat.png"));

    // exported cubes are clamped to the unit range
    const HsiCube l = read_cube(out.l_hat_path);
    for (size_t i = 0; i < l.size(); ++i) {
        CHECK(l.data()[i] >= 0.0f);
        CHECK(l.data()[i] <= 1.0f);
    }
    // PNG signature sanity
    const std::string png = slurp((fs::path(dir / "run") / "preview_l_hat.png").string());
    CHECK(png.size() > 8);
    CHECK(static_cast<unsigned char>(png[0]) == 0x89);
    CHECK(png.substr(1, 3) == "PNG");
}

TEST_CASE("denoise_only restore emits only the LR cube") {
    TempDir dir("hipandas_cli_denonly");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 13, hp);
    auto cfg = phantom_config(hp);
    cfg.train.ablation.denoise_only = true;
    cfg.train.stage1_epochs = 2;
    cfg.train.stage2_epochs = 2;
    const auto out = cli::cmd_restore(cfg, 3, dir / "run");
    CHECK(fs::exists(out.l_hat_path));
    CHECK(out.h_hat_path.empty());
    CHECK_FALSE(fs::exists(fs::path(dir / "run") / "h_hat.hicube"));
}

TEST_CASE("evaluate on identical cubes emits the degenerate report") {
    TempDir dir("hipandas_cli_eval");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 17, hp);
    const std::string report_path = dir / "report.json";
    const auto report = cli::cmd_evaluate(hp, hp, 4, report_path);
    CHECK(report.psnr == 100.0);
    CHECK(report.ssim == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.ergas == 0.0);
    CHECK(report.sam <= 1e-9);

    const auto j = nlohmann::json::parse(slurp(report_path));
    CHECK(j.size() == 5);
    for (const char* key : {"psnr", "ssim", "ergas", "sam", "skipped_pixels"})
        CHECK(j.contains(key));
}

TEST_CASE("evaluate refuses mismatched dims") {
    TempDir dir("hipandas_cli_eval2");
    const std::string a = dir / "a.hicube";
    const std::string b = dir / "b.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 19, a);
    cli::cmd_make_phantom(16, 16, 5, 2, 19, b);
    CHECK_THROWS_AS(cli::cmd_evaluate(a, b, 4, ""), DimError);
}

TEST_CASE("energy-curve emits one row per band with the expected ordering") {
    TempDir dir("hipandas_cli_curve");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(32, 32, 6, 3, 23, hp);
    const std::string csv_path = dir / "curve.csv";
    degrade::NoiseSpec spec;
    spec.kind = degrade::NoiseKind::gaussian_iid;
    spec.sigma = 30.0;
    spec.seed = 2;
    cli::cmd_energy_curve(hp, 2, std::nullopt, spec, csv_path);

    std::ifstream f(csv_path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "k,E_clean,E_noisy");
    int rows = 0;
    double prev_clean = 0.0;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream is(line);
        int k;
        char comma;
        double e_clean, e_noisy;
        is >> k >> comma >> e_clean >> comma >> e_noisy;
        CHECK(k == rows + 1);
        CHECK(e_clean >= prev_clean - 1e-12);
        CHECK(e_clean >= e_noisy); // clean detail is more low-rank
        prev_clean = e_clean;
        ++rows;
    }
    CHECK(rows == 6);
    CHECK(prev_clean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("energy-curve needs a noise source") {
    TempDir dir("hipandas_cli_curve2");
    const std::string hp = dir / "h.hicube";
    cli::cmd_make_phantom(16, 16, 4, 2, 29, hp);
    CHECK_THROWS_AS(cli::cmd_energy_curve(hp, 2, std::nullopt, std::nullopt, dir / "c.csv"),
                    ConfigError);
}

TEST_CASE("experiment grid runs all cells and reproduces bit-for-bit") {
    TempDir dir("hipandas_cli_exp");
    const std::string hp = dir / "h.hicube";
    // LR scale is 16x16, comfortably above the SSIM window
    cli::cmd_make_phantom(32, 32, 4, 2, 31, hp);
    auto cfg = phantom_config(hp);
    cfg.train.stage1_epochs = 2;
    cfg.train.stage2_epochs = 2;
    degrade::NoiseSpec n1 = cfg.noise;
    degrade::NoiseSpec n2 = cfg.noise;
    n2.sigma = 30.0;
    cfg.grid_noise = {n1, n2};
    cfg.grid_noise_seed_set = {false, false};
    cfg.grid_ablations = {"full", "denoise_only"};

    const auto rows = cli::cmd_experiment(cfg, 77, dir / "e1");
    CHECK(rows.size() == 4);
    CHECK(rows[0].ablation == "full");
    CHECK(rows[1].ablation == "denoise_only");
    CHECK(rows[0].hr.has_value());
    CHECK_FALSE(rows[1].hr.has_value());
    CHECK(rows[1].lr.psnr > 0.0);

    cli::cmd_experiment(cfg, 77, dir / "e2");
    CHECK(slurp(dir / "e1/results.csv") == slurp(dir / "e2/results.csv"));

    // csv structure: header + 4 rows
    std::istringstream is(slurp(dir / "e1/results.csv"));
    std::string line;
    int count = 0;
    while (std::getline(is, line)) ++count;
    CHECK(count == 5);
}

TEST_CASE("config JSON round-trips through load") {
    TempDir dir("hipandas_cli_cfg");
    nlohmann::json j = {
        {"hrhs", "phantom.hicube"},
        {"ratio", 4},
        {"noise", {{"kind", "mixture"}, {"p", 0.35}, {"seed", 9}}},
        {"arch", {{"channels", 16}, {"rank_gdn", 3}, {"rank_gsrn", 6}}},
        {"train", {{"stage1_epochs", 10}, {"stage2_epochs", 20}}},
        {"grid", {{"noise", {{{"kind", "gaussian_iid"}, {"sigma", 10.0}}}},
                  {"ablations", {"full", "skip_stage1"}}}}};
    const std::string path = dir / "cfg.json";
    std::ofstream(path) << j.dump(2);
    const auto cfg = cli::ExperimentConfig::load(path);
    CHECK(cfg.hrhs == "phantom.hicube");
    CHECK(cfg.ratio == 4);
    CHECK(cfg.has_noise);
    CHECK(cfg.noise.kind == degrade::NoiseKind::mixture);
    CHECK(cfg.mixture_sigma_defaulted); // flagged for the manifest
    CHECK(cfg.arch.channels == 16);
    CHECK(cfg.train.stage1_epochs == 10);
    CHECK(cfg.grid_noise.size() == 1);
    CHECK(cfg.grid_ablations.size() == 2);
    CHECK_FALSE(cfg.grid_noise_seed_set[0]);
}

TEST_CASE("config hash is stable and key-order independent") {
    nlohmann::json a = {{"x", 1}, {"y", 2}};
    nlohmann::json b = {{"y", 2}, {"x", 1}};
    CHECK(cli::config_hash(a) == cli::config_hash(b));
    nlohmann::json c = {{"x", 1}, {"y", 3}};
    CHECK(cli::config_hash(a) != cli::config_hash(c));
}
