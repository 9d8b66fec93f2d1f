#pragma once

#include <vector>

#include "hipandas/core.hpp"

namespace hipandas::prior {

/// Clean detail map D = H - upsample(downsample(H, s), s).
HsiCube detail_map(const HsiCube& h, int s);

/// Noisy detail map D~ = H - upsample(N, s), N at 1/s resolution.
HsiCube noisy_detail_map(const HsiCube& h, const HsiCube& n, int s);

/// Cumulative singular-value energy E_k = sum_{i<=k} l_i / sum_i l_i of the
/// mode-3 unfolding, k = 1..bands. Throws NumericError for an all-zero map.
std::vector<double> energy_curve(const HsiCube& map);

/// Descending singular values of the mode-3 unfolding, computed in double.
std::vector<double> singular_values(const HsiCube& cube);

} // namespace hipandas::prior
