#pragma once

#include <nlohmann/json.hpp>

#include "hipandas/core.hpp"

namespace hipandas::metrics {

struct MetricsReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double ergas = 0.0;
    double sam = 0.0;
    long skipped_pixels = 0;

    nlohmann::json to_json() const;
};

/// 10*log10(1 / MSE) over all voxels, capped at 100 dB for exact matches.
double psnr(const HsiCube& ref, const HsiCube& est);

/// Single-scale SSIM per band (11x11 Gaussian window, sigma 1.5, valid
/// windowing), averaged over bands. Spatial dims must be >= 11.
double ssim(const HsiCube& ref, const HsiCube& est);

/// 100 * (1/s) * sqrt(mean_i (RMSE_i / mean_i(ref))^2).
double ergas(const HsiCube& ref, const HsiCube& est, int s);

/// Mean per-pixel spectral angle in degrees; pixels where either spectrum
/// has norm <= 1e-8 are skipped and counted.
double sam(const HsiCube& ref, const HsiCube& est, long* skipped = nullptr);

MetricsReport evaluate(const HsiCube& ref, const HsiCube& est, int s);

} // namespace hipandas::metrics
