#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hipandas/core.hpp"

namespace hipandas::degrade {

enum class NoiseKind { gaussian_iid, gaussian_noniid, mixture };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Declarative degradation description. Intensities live on the 0-255 scale
/// and are divided by 255 when applied to unit-scaled data.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian_iid;
    double sigma = 0.0;                          // gaussian_iid
    std::array<double, 2> sigma_range = {10.0, 50.0}; // gaussian_noniid / mixture Gaussian part
    double p = 0.0;                              // mixture intensity
    uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static NoiseSpec from_json(const nlohmann::json& j);
};

/// Band weights of the PAN-forming spectral response; nonnegative, sum 1.
struct SpectralResponse {
    std::vector<float> weights;

    static SpectralResponse uniform(int bands);
    void validate(int bands) const;
    nlohmann::json to_json() const;
    static SpectralResponse from_json(const nlohmann::json& j, int bands);
};

/// s x s area-mean decimation per band; dims must divide by s.
HsiCube downsample(const HsiCube& cube, int s);
PanImage downsample(const PanImage& pan, int s);

/// Bicubic (Catmull-Rom, edge replicate) upsampling per band.
HsiCube upsample(const HsiCube& cube, int s);
PanImage upsample(const PanImage& pan, int s);

/// P(x, y) = sum_i phi_i * H(x, y, i).
PanImage synthesize_pan(const HsiCube& h, const SpectralResponse& phi);

/// Zero-mean Gaussian noise, i.i.d. or per-band sigma; no clipping.
HsiCube add_gaussian_noise(const HsiCube& cube, const NoiseSpec& spec);

/// Mixture degradation: ceil(2b/3) bands get non-i.i.d. Gaussian noise, the
/// rest are split round-robin among impulse, stripe and deadline defects.
HsiCube add_mixture_noise(const HsiCube& cube, const NoiseSpec& spec);

/// Dispatch on spec.kind.
HsiCube add_noise(const HsiCube& cube, const NoiseSpec& spec);

struct Observation {
    HsiCube n;  // noisy LRHS
    PanImage p; // HRPAN
    PanImage q; // LRPAN = P downsampled
};

/// Simulates the (N, P, Q) triple from a clean HRHS cube.
Observation simulate_observation(const HsiCube& h, int s, const SpectralResponse& phi,
                                 const NoiseSpec& spec);

} // namespace hipandas::degrade
