#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hipandas/ad.hpp"
#include "hipandas/core.hpp"

namespace hipandas::nets {

/// Architecture hyperparameters shared by GDN, GSRN and PRN.
struct ArchConfig {
    int channels = 128;
    int rank_gdn = 3;
    int rank_gsrn = 12;
    int hpf_layers = 5;
    int prn_depth = 5;
    int kernel = 3; // only 3x3 convolutions are implemented
    float leaky_slope = 0.2f;

    void validate() const;
    nlohmann::json to_json() const;
    static ArchConfig from_json(const nlohmann::json& j);
};

/// Learnable parameters of the three networks, keyed by stable names.
struct ModelState {
    ArchConfig arch;
    int bands = 0;
    bool low_rank = true; // false under the "plain CNN head" ablation
    std::map<std::string, ad::Tensor<float>> params;

    size_t parameter_count() const;
};

/// Declarative layout: (name, out_c, in_c) per convolution, in the order
/// parameters are drawn at initialization.
std::vector<std::pair<std::string, std::pair<int, int>>> param_layout(const ArchConfig& arch,
                                                                      int bands, bool low_rank);

/// Fan-in scaled uniform init (bound sqrt(6/fan_in)), zero biases,
/// deterministic per seed. Requires bands > max(rank_gdn, rank_gsrn).
ModelState init_state(const ArchConfig& arch, int bands, uint64_t seed, bool low_rank = true);

void save_state(const ModelState& state, const std::string& path);
ModelState load_state(const std::string& path);

// ---------------------------------------------------------------- graphs

/// Parameter leaves for one training or evaluation pass.
template <typename T>
struct ParamMap {
    std::map<std::string, ad::Var<T>> vars;

    const ad::Var<T>& at(const std::string& name) const {
        auto it = vars.find(name);
        if (it == vars.end()) throw ConfigError("missing parameter: " + name);
        return it->second;
    }
};

template <typename T>
ParamMap<T> lift_params(const ModelState& state, bool track) {
    ParamMap<T> pm;
    for (const auto& [name, tensor] : state.params) {
        auto v = ad::constant(tensor.template cast<T>());
        v->track = track;
        pm.vars.emplace(name, std::move(v));
    }
    return pm;
}

/// Writes trained parameter values back into the state.
void absorb_params(ModelState& state, const ParamMap<float>& pm);

template <typename T>
struct GdnGraph {
    ad::Var<T> l_hat;
    ad::Var<T> u; // (bands, rank, 1); null when low_rank is off
    ad::Var<T> v; // (rank, h, w); null when low_rank is off
};

template <typename T>
struct GsrnGraph {
    ad::Var<T> h_hat;
    ad::Var<T> upsampled; // bicubic base the detail is injected on
    ad::Var<T> detail;
};

/// Guided denoising network: factorized U/V branches over (N, Q).
template <typename T>
GdnGraph<T> gdn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& n,
                      const ad::Var<T>& q);

/// Guided super-resolution network: detail injection on upsample(l_hat, s)
/// guided by the PAN image at the target scale.
template <typename T>
GsrnGraph<T> gsrn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& l_hat,
                        const ad::Var<T>& pan, int s);

/// PAN reconstruction network: plain convolution stack, linear final layer.
template <typename T>
ad::Var<T> prn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& cube);

/// One HS-PAN fusion layer: two convolutions over the channel-concatenated
/// features, both leaky-ReLU activated.
template <typename T>
std::pair<ad::Var<T>, ad::Var<T>> hpf_layer(const ad::Var<T>& hs, const ad::Var<T>& pan,
                                            const ad::Var<T>& wa, const ad::Var<T>& ba,
                                            const ad::Var<T>& wb, const ad::Var<T>& bb,
                                            T slope);

// ------------------------------------------------------------- evaluation

struct GdnOutput {
    HsiCube l_hat;
    CoeffMatrix u;  // empty when the state was built without the low-rank head
    BaseImages v;
};

GdnOutput gdn_forward(const ModelState& state, const HsiCube& n, const PanImage& q);
HsiCube gsrn_forward(const ModelState& state, const HsiCube& l_hat, const PanImage& p, int s);
PanImage prn_forward(const ModelState& state, const HsiCube& cube);

// Conversions between the data model and autodiff tensors (shared layout).
ad::Tensor<float> to_tensor(const HsiCube& cube);
ad::Tensor<float> to_tensor(const PanImage& pan);
HsiCube cube_from_tensor(const ad::Tensor<float>& t, bool unit_scaled = false);
PanImage pan_from_tensor(const ad::Tensor<float>& t);

} // namespace hipandas::nets
