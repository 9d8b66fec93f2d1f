#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hipandas/core.hpp"
#include "hipandas/nets.hpp"

namespace hipandas::train {

struct AblationFlags {
    bool drop_LD = false;     // remove the denoising loss
    bool drop_LS = false;     // remove both super-resolution losses
    bool drop_LP_LQ = false;  // remove both PAN high-frequency losses
    bool skip_stage1 = false; // stage 2 only, from random init
    bool no_lowrank = false;  // plain b-channel tail instead of the factorized head
    bool no_pan = false;      // zero PAN inputs into GDN/GSRN
    bool denoise_only = false; // train GDN alone with the denoising loss

    nlohmann::json to_json() const;
    static AblationFlags from_json(const nlohmann::json& j);
    static AblationFlags from_name(const std::string& name);
    std::string name() const;
};

struct TrainConfig {
    int stage1_epochs = 400;
    int stage2_epochs = 600;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    AblationFlags ablation;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TraceRow {
    int epoch = 0; // global index across both stages
    int stage = 1;
    double l_d = 0.0, l_s = 0.0, l_q = 0.0, l_p = 0.0, total = 0.0;
};

struct LossTrace {
    std::vector<TraceRow> rows;

    std::string to_csv() const;
    void write_csv(const std::string& path) const;
};

/// Thrown when any loss component turns non-finite during optimization.
class TrainAbort : public NumericError {
public:
    TrainAbort(int epoch, const TraceRow& row);
    int epoch;
    TraceRow components;
};

// Loss functions (evaluation forms; all mean-normalized, computed in double).
double loss_denoise(const HsiCube& n, const HsiCube& l_hat);
double loss_pan_highfreq(const PanImage& pan_ref, const PanImage& pan_hat);
double loss_sr_stage1(const nets::ModelState& state, const HsiCube& l_hat, const PanImage& q,
                      int s);
double loss_sr_stage2(const HsiCube& h_hat, const HsiCube& l_hat, int s);

struct RestorationResult {
    HsiCube l_hat;
    std::optional<HsiCube> h_hat; // absent for denoise-only runs
    LossTrace trace;
    nets::ModelState state;
    int ratio = 0;
};

using EpochObserver = std::function<void(const TraceRow&)>;

/// Zero-shot restoration: stage 1 minimizes L_D + L_S1 + L_Q at the LR
/// scale, stage 2 continues the same parameters and optimizer state on
/// L_D + L_S2 + L_Q + L_P. One full-image Adam step per epoch.
RestorationResult run_restoration(const HsiCube& n, const PanImage& p, const PanImage& q,
                                  const nets::ArchConfig& arch, const TrainConfig& tc,
                                  const EpochObserver& observer = {});

} // namespace hipandas::train
