#include "hipandas/degrade.hpp"

#include <cmath>

#include "hipandas/kernels.hpp"
#include "hipandas/rng.hpp"

namespace hipandas::degrade {

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::gaussian_iid: return "gaussian_iid";
        case NoiseKind::gaussian_noniid: return "gaussian_noniid";
        case NoiseKind::mixture: return "mixture";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian_iid") return NoiseKind::gaussian_iid;
    if (s == "gaussian_noniid") return NoiseKind::gaussian_noniid;
    if (s == "mixture") return NoiseKind::mixture;
    throw ConfigError("unknown noise kind: " + s);
}

void NoiseSpec::validate() const {
    if (sigma < 0.0) throw ConfigError("NoiseSpec: sigma must be >= 0");
    if (sigma_range[0] < 0.0 || sigma_range[0] > sigma_range[1])
        throw ConfigError("NoiseSpec: need 0 <= lo <= hi in sigma_range");
    if (p < 0.0 || p > 1.0) throw ConfigError("NoiseSpec: p must be in [0, 1]");
}

nlohmann::json NoiseSpec::to_json() const {
    nlohmann::json j = {{"kind", to_string(kind)}, {"seed", seed}};
    switch (kind) {
        case NoiseKind::gaussian_iid: j["sigma"] = sigma; break;
        case NoiseKind::gaussian_noniid: j["sigma_range"] = sigma_range; break;
        case NoiseKind::mixture:
            j["sigma_range"] = sigma_range;
            j["p"] = p;
            break;
    }
    return j;
}

NoiseSpec NoiseSpec::from_json(const nlohmann::json& j) {
    NoiseSpec spec;
    spec.kind = noise_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("sigma")) spec.sigma = j["sigma"].get<double>();
    if (j.contains("sigma_range")) spec.sigma_range = j["sigma_range"].get<std::array<double, 2>>();
    if (j.contains("p")) spec.p = j["p"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
    spec.validate();
    return spec;
}

SpectralResponse SpectralResponse::uniform(int bands) {
    SpectralResponse phi;
    phi.weights.assign(bands, 1.0f / static_cast<float>(bands));
    return phi;
}

void SpectralResponse::validate(int bands) const {
    if (static_cast<int>(weights.size()) != bands)
        throw DimError("SpectralResponse: " + std::to_string(weights.size()) +
                       " weights for " + std::to_string(bands) + " bands");
    double sum = 0.0;
    for (float w : weights) {
        if (w < 0.0f) throw ConfigError("SpectralResponse: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ConfigError("SpectralResponse: weights sum to " + std::to_string(sum));
}

nlohmann::json SpectralResponse::to_json() const {
    return nlohmann::json{{"weights", weights}};
}

SpectralResponse SpectralResponse::from_json(const nlohmann::json& j, int bands) {
    if (j.is_null() || (j.contains("kind") && j["kind"] == "uniform"))
        return uniform(bands);
    SpectralResponse phi;
    phi.weights = j.at("weights").get<std::vector<float>>();
    phi.validate(bands);
    return phi;
}

HsiCube downsample(const HsiCube& cube, int s) {
    if (s < 2) throw DimError("downsample: ratio must be >= 2");
    if (cube.height() % s != 0 || cube.width() % s != 0)
        throw DimError("downsample: dims " + std::to_string(cube.height()) + "x" +
                       std::to_string(cube.width()) + " not divisible by " + std::to_string(s));
    HsiCube out(cube.height() / s, cube.width() / s, cube.bands(), 0.0f, cube.unit_scaled);
    for (int b = 0; b < cube.bands(); ++b)
        kernels::area_downsample(cube.band(b).data(), cube.height(), cube.width(), s,
                                 out.band(b).data());
    return out;
}

PanImage downsample(const PanImage& pan, int s) {
    if (s < 2) throw DimError("downsample: ratio must be >= 2");
    if (pan.height() % s != 0 || pan.width() % s != 0)
        throw DimError("downsample: PAN dims not divisible by " + std::to_string(s));
    PanImage out(pan.height() / s, pan.width() / s);
    kernels::area_downsample(pan.data(), pan.height(), pan.width(), s, out.data());
    return out;
}

HsiCube upsample(const HsiCube& cube, int s) {
    if (s < 2) throw DimError("upsample: ratio must be >= 2");
    const auto ay = kernels::bicubic_axis(cube.height(), s);
    const auto ax = kernels::bicubic_axis(cube.width(), s);
    HsiCube out(cube.height() * s, cube.width() * s, cube.bands(), 0.0f, cube.unit_scaled);
    for (int b = 0; b < cube.bands(); ++b)
        kernels::bicubic_upsample(cube.band(b).data(), cube.height(), cube.width(), ay, ax,
                                  out.band(b).data());
    return out;
}

PanImage upsample(const PanImage& pan, int s) {
    if (s < 2) throw DimError("upsample: ratio must be >= 2");
    const auto ay = kernels::bicubic_axis(pan.height(), s);
    const auto ax = kernels::bicubic_axis(pan.width(), s);
    PanImage out(pan.height() * s, pan.width() * s);
    kernels::bicubic_upsample(pan.data(), pan.height(), pan.width(), ay, ax, out.data());
    return out;
}

PanImage synthesize_pan(const HsiCube& h, const SpectralResponse& phi) {
    phi.validate(h.bands());
    PanImage pan(h.height(), h.width());
    const size_t pixels = static_cast<size_t>(h.height()) * h.width();
    std::vector<double> acc(pixels, 0.0);
    for (int b = 0; b < h.bands(); ++b) {
        const float* plane = h.band(b).data();
        const double wb = phi.weights[b];
        for (size_t i = 0; i < pixels; ++i) acc[i] += wb * plane[i];
    }
    for (size_t i = 0; i < pixels; ++i) pan.data()[i] = static_cast<float>(acc[i]);
    return pan;
}

HsiCube add_gaussian_noise(const HsiCube& cube, const NoiseSpec& spec) {
    if (spec.kind == NoiseKind::mixture)
        throw ConfigError("add_gaussian_noise: spec.kind must be a Gaussian kind");
    spec.validate();
    Rng rng(spec.seed);
    HsiCube out = cube;
    out.unit_scaled = false;
    if (spec.kind == NoiseKind::gaussian_iid) {
        const double sd = spec.sigma / 255.0;
        float* v = out.data();
        for (size_t i = 0; i < out.size(); ++i)
            v[i] = static_cast<float>(static_cast<double>(v[i]) + sd * rng.normal());
    } else {
        for (int b = 0; b < out.bands(); ++b) {
            const double sd = rng.uniform(spec.sigma_range[0], spec.sigma_range[1]) / 255.0;
            auto plane = out.band(b);
            for (float& x : plane) x = static_cast<float>(static_cast<double>(x) + sd * rng.normal());
        }
    }
    return out;
}

namespace {

// Defect kinds for the non-Gaussian third of mixture bands, assigned
// round-robin in this order.
enum class Defect { impulse, stripe, deadline };

void apply_impulse(Rng& rng, float* plane, int h, int w, double p) {
    const int count = static_cast<int>(std::lround(p * h * w));
    const std::vector<int> pixels = rng.choose(h * w, count);
    for (int idx : pixels) plane[idx] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
}

void apply_stripe(Rng& rng, float* plane, int h, int w, double p) {
    const int count = static_cast<int>(std::lround(p * w));
    const std::vector<int> cols = rng.choose(w, count);
    for (int col : cols) {
        const float off = static_cast<float>(rng.uniform(-0.25, 0.25));
        for (int y = 0; y < h; ++y) plane[static_cast<size_t>(y) * w + col] += off;
    }
}

void apply_deadline(Rng& rng, float* plane, int h, int w, double p) {
    const int count = static_cast<int>(std::lround(p * w));
    const std::vector<int> cols = rng.choose(w, count);
    for (int col : cols)
        for (int y = 0; y < h; ++y) plane[static_cast<size_t>(y) * w + col] = 0.0f;
}

} // namespace

HsiCube add_mixture_noise(const HsiCube& cube, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::mixture)
        throw ConfigError("add_mixture_noise: spec.kind must be mixture");
    spec.validate();
    const int b = cube.bands();
    if (b < 3) throw DimError("add_mixture_noise: need at least 3 bands");

    // Draw order is fixed: band permutation first, then per-band randomness
    // in ascending band index order.
    Rng rng(spec.seed);
    const std::vector<int> perm = rng.permutation(b);
    const int n_gauss = (2 * b + 2) / 3; // ceil(2b/3)

    std::vector<int> role(b); // -1 = gaussian, else Defect
    for (int i = 0; i < n_gauss; ++i) role[perm[i]] = -1;
    for (int i = n_gauss; i < b; ++i) role[perm[i]] = (i - n_gauss) % 3;

    HsiCube out = cube;
    out.unit_scaled = false;
    const int h = out.height(), w = out.width();
    for (int band = 0; band < b; ++band) {
        float* plane = out.band(band).data();
        if (role[band] < 0) {
            const double sd = rng.uniform(spec.sigma_range[0], spec.sigma_range[1]) / 255.0;
            const size_t n = static_cast<size_t>(h) * w;
            for (size_t i = 0; i < n; ++i)
                plane[i] = static_cast<float>(static_cast<double>(plane[i]) + sd * rng.normal());
        } else {
            switch (static_cast<Defect>(role[band])) {
                case Defect::impulse: apply_impulse(rng, plane, h, w, spec.p); break;
                case Defect::stripe: apply_stripe(rng, plane, h, w, spec.p); break;
                case Defect::deadline: apply_deadline(rng, plane, h, w, spec.p); break;
            }
        }
    }
    return out;
}

HsiCube add_noise(const HsiCube& cube, const NoiseSpec& spec) {
    return spec.kind == NoiseKind::mixture ? add_mixture_noise(cube, spec)
                                           : add_gaussian_noise(cube, spec);
}

Observation simulate_observation(const HsiCube& h, int s, const SpectralResponse& phi,
                                 const NoiseSpec& spec) {
    Observation obs;
    obs.n = add_noise(downsample(h, s), spec);
    obs.p = synthesize_pan(h, phi);
    obs.q = downsample(obs.p, s);
    return obs;
}

} // namespace hipandas::degrade
