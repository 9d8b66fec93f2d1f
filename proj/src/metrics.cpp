#include "hipandas/metrics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace hipandas::metrics {

namespace {

void require_same_dims(const HsiCube& a, const HsiCube& b, const char* op) {
    if (a.height() != b.height() || a.width() != b.width() || a.bands() != b.bands())
        throw DimError(std::string(op) + ": dimension mismatch " + std::to_string(a.height()) +
                       "x" + std::to_string(a.width()) + "x" + std::to_string(a.bands()) +
                       " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()) +
                       "x" + std::to_string(b.bands()));
}

} // namespace

nlohmann::json MetricsReport::to_json() const {
    return nlohmann::json{{"psnr", psnr},
                          {"ssim", ssim},
                          {"ergas", ergas},
                          {"sam", sam},
                          {"skipped_pixels", skipped_pixels}};
}

double psnr(const HsiCube& ref, const HsiCube& est) {
    require_same_dims(ref, est, "psnr");
    double sse = 0.0;
    const float* r = ref.data();
    const float* e = est.data();
    for (size_t i = 0; i < ref.size(); ++i) {
        const double d = static_cast<double>(r[i]) - static_cast<double>(e[i]);
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(ref.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
std::vector<double> ssim_window() {
    constexpr int kHalf = 5;
    std::vector<double> w(11 * 11);
    double sum = 0.0;
    for (int y = -kHalf; y <= kHalf; ++y)
        for (int x = -kHalf; x <= kHalf; ++x) {
            const double g = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
            w[(y + kHalf) * 11 + (x + kHalf)] = g;
            sum += g;
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double ssim(const HsiCube& ref, const HsiCube& est) {
    require_same_dims(ref, est, "ssim");
    const int h = ref.height(), w = ref.width();
    if (h < 11 || w < 11)
        throw DimError("ssim: spatial dims must be >= 11, got " + std::to_string(h) + "x" +
                       std::to_string(w));
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    static const std::vector<double> win = ssim_window();

    double band_sum = 0.0;
    for (int b = 0; b < ref.bands(); ++b) {
        const float* rp = ref.band(b).data();
        const float* ep = est.band(b).data();
        double acc = 0.0;
        long count = 0;
        for (int y = 0; y + 11 <= h; ++y) {
            for (int x = 0; x + 11 <= w; ++x) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                const double* wp = win.data();
                for (int dy = 0; dy < 11; ++dy) {
                    const float* rr = rp + static_cast<size_t>(y + dy) * w + x;
                    const float* ee = ep + static_cast<size_t>(y + dy) * w + x;
                    for (int dx = 0; dx < 11; ++dx, ++wp) {
                        const double wx = *wp;
                        const double a = rr[dx], bb = ee[dx];
                        mx += wx * a;
                        my += wx * bb;
                        sxx += wx * a * a;
                        syy += wx * bb * bb;
                        sxy += wx * a * bb;
                    }
                }
                const double vx = sxx - mx * mx;
                const double vy = syy - my * my;
                const double cov = sxy - mx * my;
                const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
                const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
                acc += num / den;
                ++count;
            }
        }
        band_sum += acc / static_cast<double>(count);
    }
    return band_sum / ref.bands();
}

double ergas(const HsiCube& ref, const HsiCube& est, int s) {
    require_same_dims(ref, est, "ergas");
    const size_t pixels = static_cast<size_t>(ref.height()) * ref.width();
    double acc = 0.0;
    for (int b = 0; b < ref.bands(); ++b) {
        const float* rp = ref.band(b).data();
        const float* ep = est.band(b).data();
        double mean = 0.0, sse = 0.0;
        for (size_t i = 0; i < pixels; ++i) {
            mean += rp[i];
            const double d = static_cast<double>(rp[i]) - static_cast<double>(ep[i]);
            sse += d * d;
        }
        mean /= static_cast<double>(pixels);
        if (mean == 0.0)
            throw NumericError("ergas: reference band " + std::to_string(b) + " has zero mean");
        const double rmse = std::sqrt(sse / static_cast<double>(pixels));
        acc += (rmse / mean) * (rmse / mean);
    }
    return 100.0 / s * std::sqrt(acc / ref.bands());
}

double sam(const HsiCube& ref, const HsiCube& est, long* skipped) {
    require_same_dims(ref, est, "sam");
    if (ref.bands() < 2) throw DimError("sam: need at least 2 bands");
    const int h = ref.height(), w = ref.width(), b = ref.bands();
    const size_t pixels = static_cast<size_t>(h) * w;
    std::vector<double> u(b), v(b);
    double acc = 0.0;
    long used = 0, skip = 0;
    for (size_t px = 0; px < pixels; ++px) {
        double nr2 = 0, ne2 = 0;
        for (int i = 0; i < b; ++i) {
            const double a = ref.data()[static_cast<size_t>(i) * pixels + px];
            const double c = est.data()[static_cast<size_t>(i) * pixels + px];
            u[i] = a;
            v[i] = c;
            nr2 += a * a;
            ne2 += c * c;
        }
        const double nr = std::sqrt(nr2);
        const double ne = std::sqrt(ne2);
        if (nr <= 1e-8 || ne <= 1e-8) {
            ++skip;
            continue;
        }
        // Kahan's angle formula on the normalized spectra; exact for
        // collinear inputs where acos(dot) loses precision.
        double dm = 0, dp = 0;
        for (int i = 0; i < b; ++i) {
            const double a = u[i] / nr, c = v[i] / ne;
            dm += (a - c) * (a - c);
            dp += (a + c) * (a + c);
        }
        acc += 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
        ++used;
    }
    if (skipped) *skipped = skip;
    if (used == 0) return 0.0;
    return acc / used * 180.0 / std::numbers::pi;
}

MetricsReport evaluate(const HsiCube& ref, const HsiCube& est, int s) {
    MetricsReport rep;
    rep.psnr = psnr(ref, est);
    rep.ssim = ssim(ref, est);
    rep.ergas = ergas(ref, est, s);
    rep.sam = sam(ref, est, &rep.skipped_pixels);
    return rep;
}

} // namespace hipandas::metrics
