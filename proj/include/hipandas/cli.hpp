#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hipandas/core.hpp"
#include "hipandas/degrade.hpp"
#include "hipandas/metrics.hpp"
#include "hipandas/nets.hpp"
#include "hipandas/train.hpp"

namespace hipandas::cli {

/// One experiment description: input paths, ratio, spectral response, noise,
/// architecture, training schedule, and an optional grid for sweeps.
struct ExperimentConfig {
    std::string hrhs;                   // clean HRHS cube (simulation route)
    std::string nlrhs, hrpan, lrpan;    // pre-simulated observation route
    int ratio = 4;
    nlohmann::json spectral_response;   // resolved against the cube's bands
    degrade::NoiseSpec noise;
    bool has_noise = false;
    bool noise_seed_set = false;
    bool mixture_sigma_defaulted = false;
    nets::ArchConfig arch;
    train::TrainConfig train;
    std::vector<int> preview_bands;     // empty = first / middle / last band
    std::vector<degrade::NoiseSpec> grid_noise;
    std::vector<bool> grid_noise_seed_set;
    std::vector<std::string> grid_ablations;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
};

uint64_t fnv1a64(const std::string& s);
std::string config_hash(const nlohmann::json& j);

/// Values clamped into [0, 1]; unit_scaled set.
HsiCube clamp_unit(const HsiCube& cube);

/// Deterministic unit-scaled HRHS phantom: a rank-`rank` spectral mixture of
/// smooth gradients and band-correlated sinusoid texture.
HsiCube make_phantom(int height, int width, int bands, int rank, uint64_t seed);

void cmd_make_phantom(int height, int width, int bands, int rank, uint64_t seed,
                      const std::string& out_path);

struct SimulateOutputs {
    std::string n_path, p_path, q_path, manifest_path;
};
SimulateOutputs cmd_simulate(const ExperimentConfig& cfg, uint64_t seed,
                             const std::string& out_dir);

struct RestoreOutputs {
    train::RestorationResult result;
    std::string l_hat_path, h_hat_path, trace_path, state_path, manifest_path;
};
RestoreOutputs cmd_restore(const ExperimentConfig& cfg, uint64_t seed,
                           const std::string& out_dir);

metrics::MetricsReport cmd_evaluate(const std::string& ref_path, const std::string& est_path,
                                    int s, const std::string& out_json = "");

void cmd_energy_curve(const std::string& cube_path, int s,
                      const std::optional<std::string>& noisy_path,
                      const std::optional<degrade::NoiseSpec>& spec,
                      const std::string& out_csv);

struct ExperimentRow {
    int cell = 0;
    std::string noise_kind, noise_param, ablation;
    std::optional<metrics::MetricsReport> hr;  // H_hat vs H
    metrics::MetricsReport lr;                 // L_hat vs L
    double psnr_bicubic = 0.0;                 // upsample(N, s) vs H baseline
    std::optional<double> down_consistency;    // |H_hat_down - L_hat|_F / |L_hat|_F
};

std::string experiment_rows_to_csv(const std::vector<ExperimentRow>& rows);

/// Runs the noise x ablation grid, one restoration per cell, and writes
/// results.csv plus a manifest. Cells are deterministic per seed.
std::vector<ExperimentRow> cmd_experiment(const ExperimentConfig& cfg, uint64_t seed,
                                          const std::string& out_dir);

} // namespace hipandas::cli
