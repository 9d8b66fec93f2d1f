#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hipandas/degrade.hpp"
#include "hipandas/rng.hpp"

using namespace hipandas;
using namespace hipandas::degrade;

namespace {

HsiCube random_cube(int h, int w, int b, uint64_t seed) {
    Rng rng(seed);
    HsiCube cube(h, w, b);
    for (size_t i = 0; i < cube.size(); ++i)
        cube.data()[i] = static_cast<float>(rng.uniform());
    return cube;
}

} // namespace

TEST_CASE("downsample is the area mean of each block") {
    HsiCube cube(2, 2, 1);
    cube.at(0, 0, 0) = 0.0f;
    cube.at(0, 1, 0) = 0.2f;
    cube.at(1, 0, 0) = 0.4f;
    cube.at(1, 1, 0) = 0.6f;
    const HsiCube out = downsample(cube, 2);
    CHECK(out.height() == 1);
    CHECK(out.width() == 1);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("downsample of a constant cube is the same constant") {
    HsiCube cube(8, 8, 3, 0.42f);
    const HsiCube out = downsample(cube, 4);
    for (size_t i = 0; i < out.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(0.42).epsilon(1e-7));
}

TEST_CASE("two s=2 downsamples compose to one s=4 downsample") {
    const HsiCube cube = random_cube(16, 16, 2, 11);
    const HsiCube twice = downsample(downsample(cube, 2), 2);
    const HsiCube once = downsample(cube, 4);
    REQUIRE(twice.size() == once.size());
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(twice.data()[i] == doctest::Approx(once.data()[i]).epsilon(1e-7));
}

TEST_CASE("downsample refuses non-divisible dims") {
    HsiCube cube(6, 6, 1);
    CHECK_THROWS_AS(downsample(cube, 4), DimError);
}

TEST_CASE("downsample preserves each band's global mean") {
    const HsiCube cube = random_cube(12, 8, 3, 19);
    const HsiCube out = downsample(cube, 4);
    for (int b = 0; b < 3; ++b) {
        double m_in = 0.0, m_out = 0.0;
        for (float v : cube.band(b)) m_in += v;
        for (float v : out.band(b)) m_out += v;
        m_in /= static_cast<double>(cube.band(b).size());
        m_out /= static_cast<double>(out.band(b).size());
        CHECK(m_out == doctest::Approx(m_in).epsilon(1e-6));
    }
}

TEST_CASE("upsample of a constant band stays constant") {
    HsiCube cube(3, 5, 2, 0.37f);
    const HsiCube out = upsample(cube, 4);
    CHECK(out.height() == 12);
    CHECK(out.width() == 20);
    for (size_t i = 0; i < out.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("bicubic upsampling reproduces a linear ramp in the interior") {
    const int h = 8, w = 8, s = 4;
    const float c = 0.1f;
    HsiCube cube(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) cube.at(y, x, 0) = c * x;
    const HsiCube out = upsample(cube, s);
    // interior output pixels sample the ramp at (X + 0.5)/s - 0.5
    for (int y = 8; y < out.height() - 8; ++y)
        for (int x = 8; x < out.width() - 8; ++x) {
            const double src = (x + 0.5) / s - 0.5;
            CHECK(out.at(y, x, 0) == doctest::Approx(c * src).epsilon(1e-3));
        }
}

TEST_CASE("a single sample upsamples to a constant block") {
    HsiCube cube(1, 1, 1, 0.8f);
    const HsiCube out = upsample(cube, 3);
    CHECK(out.height() == 3);
    CHECK(out.width() == 3);
    for (size_t i = 0; i < out.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("synthesize_pan of a constant cube is that constant") {
    HsiCube cube(4, 4, 5, 0.55f);
    const PanImage pan = synthesize_pan(cube, SpectralResponse::uniform(5));
    for (size_t i = 0; i < pan.size(); ++i)
        CHECK(pan.data()[i] == doctest::Approx(0.55).epsilon(1e-6));
}

TEST_CASE("one-hot response selects a band") {
    const HsiCube cube = random_cube(4, 4, 4, 3);
    SpectralResponse phi;
    phi.weights = {0.0f, 0.0f, 1.0f, 0.0f};
    const PanImage pan = synthesize_pan(cube, phi);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(pan.at(y, x) == doctest::Approx(cube.at(y, x, 2)).epsilon(1e-7));
}

TEST_CASE("uniform response of a known spectrum is its mean") {
    HsiCube cube(1, 1, 4);
    cube.at(0, 0, 0) = 0.1f;
    cube.at(0, 0, 1) = 0.2f;
    cube.at(0, 0, 2) = 0.3f;
    cube.at(0, 0, 3) = 0.4f;
    const PanImage pan = synthesize_pan(cube, SpectralResponse::uniform(4));
    CHECK(pan.at(0, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("synthesize_pan rejects band mismatch") {
    HsiCube cube(2, 2, 3);
    CHECK_THROWS_AS(synthesize_pan(cube, SpectralResponse::uniform(4)), DimError);
}

TEST_CASE("pan synthesis commutes with downsampling") {
    const HsiCube cube = random_cube(16, 16, 6, 29);
    const auto phi = SpectralResponse::uniform(6);
    const PanImage a = downsample(synthesize_pan(cube, phi), 4);
    const PanImage b = synthesize_pan(downsample(cube, 4), phi);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-6));
}

TEST_CASE("sigma zero leaves the cube bitwise unchanged") {
    const HsiCube cube = random_cube(6, 6, 3, 41);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_iid;
    spec.sigma = 0.0;
    spec.seed = 5;
    CHECK(add_gaussian_noise(cube, spec) == cube);
}

TEST_CASE("iid noise sample std matches sigma/255 within 2 percent") {
    HsiCube cube(256, 256, 1, 0.5f);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_iid;
    spec.sigma = 10.0;
    spec.seed = 77;
    const HsiCube noisy = add_gaussian_noise(cube, spec);
    double mean = 0.0;
    const size_t n = noisy.size();
    for (size_t i = 0; i < n; ++i) mean += noisy.data()[i] - cube.data()[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = noisy.data()[i] - cube.data()[i] - mean;
        var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    CHECK(sd == doctest::Approx(10.0 / 255.0).epsilon(0.02));
}

TEST_CASE("same seed reproduces noise bitwise") {
    const HsiCube cube = random_cube(16, 16, 4, 2);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_noniid;
    spec.sigma_range = {10.0, 50.0};
    spec.seed = 123;
    CHECK(add_gaussian_noise(cube, spec) == add_gaussian_noise(cube, spec));

    NoiseSpec mix = spec;
    mix.kind = NoiseKind::mixture;
    mix.p = 0.3;
    CHECK(add_mixture_noise(cube, mix) == add_mixture_noise(cube, mix));
}

TEST_CASE("non-iid noise uses one sigma per band") {
    HsiCube cube(64, 64, 4, 0.5f);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_noniid;
    spec.sigma_range = {5.0, 50.0};
    spec.seed = 9;
    const HsiCube noisy = add_gaussian_noise(cube, spec);
    std::vector<double> sds;
    for (int b = 0; b < 4; ++b) {
        double var = 0.0;
        for (size_t i = 0; i < cube.band(b).size(); ++i) {
            const double d = noisy.band(b)[i] - cube.band(b)[i];
            var += d * d;
        }
        sds.push_back(std::sqrt(var / static_cast<double>(cube.band(b).size())));
        CHECK(sds.back() >= 4.0 / 255.0);
        CHECK(sds.back() <= 55.0 / 255.0);
    }
    // per-band draws differ
    CHECK(std::abs(sds[0] - sds[1]) + std::abs(sds[1] - sds[2]) > 1e-4);
}

TEST_CASE("mixture with p=0 only perturbs the Gaussian band subset") {
    const HsiCube cube = random_cube(12, 12, 6, 8);
    NoiseSpec spec;
    spec.kind = NoiseKind::mixture;
    spec.sigma_range = {10.0, 50.0};
    spec.p = 0.0;
    spec.seed = 100;
    const HsiCube noisy = add_mixture_noise(cube, spec);
    int changed = 0;
    for (int b = 0; b < 6; ++b) {
        bool diff = false;
        for (size_t i = 0; i < cube.band(b).size(); ++i)
            if (noisy.band(b)[i] != cube.band(b)[i]) diff = true;
        if (diff) ++changed;
    }
    CHECK(changed == 4); // ceil(2*6/3)
}

TEST_CASE("mixture p=1 zeroes entire deadline bands") {
    NoiseSpec spec;
    spec.kind = NoiseKind::mixture;
    spec.sigma_range = {10.0, 50.0};
    spec.p = 1.0;
    // 9 bands: 6 Gaussian + impulse + stripe + deadline, one of each
    const HsiCube cube = random_cube(8, 8, 9, 15);
    bool found_deadline = false;
    for (uint64_t seed = 0; seed < 8 && !found_deadline; ++seed) {
        NoiseSpec s2 = spec;
        s2.seed = seed;
        const HsiCube noisy = add_mixture_noise(cube, s2);
        for (int b = 0; b < 9; ++b) {
            bool all_zero = true;
            for (float v : noisy.band(b)) all_zero = all_zero && v == 0.0f;
            if (all_zero) found_deadline = true;
        }
    }
    CHECK(found_deadline);
}

TEST_CASE("stripe band has exactly round(p*w) offset columns") {
    const int w = 64, h = 32;
    // 6 bands: 4 Gaussian, then impulse and stripe round-robin.
    const HsiCube cube = random_cube(h, w, 6, 77);
    NoiseSpec spec;
    spec.kind = NoiseKind::mixture;
    spec.sigma_range = {10.0, 50.0};
    spec.p = 0.15;
    spec.seed = 21;
    const HsiCube noisy = add_mixture_noise(cube, spec);

    int stripe_bands = 0;
    for (int b = 0; b < 6; ++b) {
        std::set<int> offset_cols;
        bool column_structured = true;
        for (int x = 0; x < w; ++x) {
            const float r0 = noisy.at(0, x, b) - cube.at(0, x, b);
            bool constant = true;
            for (int y = 1; y < h; ++y) {
                const float ry = noisy.at(y, x, b) - cube.at(y, x, b);
                if (std::abs(ry - r0) > 1e-6f) constant = false;
            }
            if (!constant) column_structured = false;
            if (constant && std::abs(r0) > 1e-7f) offset_cols.insert(x);
        }
        if (column_structured && !offset_cols.empty()) {
            ++stripe_bands;
            CHECK(static_cast<int>(offset_cols.size()) == 10); // round(0.15 * 64)
        }
    }
    CHECK(stripe_bands == 1);
}

TEST_CASE("simulate_observation with zero noise equals the clean downsample") {
    const HsiCube h = random_cube(32, 32, 4, 50);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_iid;
    spec.sigma = 0.0;
    const auto obs = simulate_observation(h, 4, SpectralResponse::uniform(4), spec);
    CHECK(obs.n == downsample(h, 4));
}

TEST_CASE("simulate_observation produces the documented shapes") {
    const HsiCube h = random_cube(256, 256, 32, 60);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_iid;
    spec.sigma = 10.0;
    spec.seed = 1;
    const auto obs = simulate_observation(h, 4, SpectralResponse::uniform(32), spec);
    CHECK(obs.n.height() == 64);
    CHECK(obs.n.width() == 64);
    CHECK(obs.n.bands() == 32);
    CHECK(obs.p.height() == 256);
    CHECK(obs.p.width() == 256);
    CHECK(obs.q.height() == 64);
    CHECK(obs.q.width() == 64);
}

TEST_CASE("constants commute with the whole observation model") {
    HsiCube h(16, 16, 3, 0.6f);
    NoiseSpec spec;
    spec.kind = NoiseKind::gaussian_iid;
    spec.sigma = 0.0;
    const auto obs = simulate_observation(h, 2, SpectralResponse::uniform(3), spec);
    for (size_t i = 0; i < obs.n.size(); ++i)
        CHECK(obs.n.data()[i] == doctest::Approx(0.6).epsilon(1e-6));
    for (size_t i = 0; i < obs.p.size(); ++i)
        CHECK(obs.p.data()[i] == doctest::Approx(0.6).epsilon(1e-6));
    for (size_t i = 0; i < obs.q.size(); ++i)
        CHECK(obs.q.data()[i] == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("noise spec JSON round-trips") {
    NoiseSpec spec;
    spec.kind = NoiseKind::mixture;
    spec.sigma_range = {10.0, 50.0};
    spec.p = 0.35;
    spec.seed = 99;
    const NoiseSpec back = NoiseSpec::from_json(spec.to_json());
    CHECK(back.kind == spec.kind);
    CHECK(back.sigma_range == spec.sigma_range);
    CHECK(back.p == spec.p);
    CHECK(back.seed == spec.seed);
}

TEST_CASE("invalid specs are rejected") {
    NoiseSpec spec;
    spec.p = 1.5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.p = 0.0;
    spec.sigma = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}
