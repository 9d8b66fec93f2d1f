#include "hipandas/prior.hpp"

#include <Eigen/SVD>

#include "hipandas/degrade.hpp"

namespace hipandas::prior {

namespace {

HsiCube subtract(const HsiCube& a, const HsiCube& b) {
    if (a.height() != b.height() || a.width() != b.width() || a.bands() != b.bands())
        throw DimError("detail map: dimension mismatch");
    HsiCube out(a.height(), a.width(), a.bands(), 0.0f, false);
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

} // namespace

HsiCube detail_map(const HsiCube& h, int s) {
    return subtract(h, degrade::upsample(degrade::downsample(h, s), s));
}

HsiCube noisy_detail_map(const HsiCube& h, const HsiCube& n, int s) {
    if (n.height() * s != h.height() || n.width() * s != h.width() || n.bands() != h.bands())
        throw DimError("noisy_detail_map: N dims must be H dims / " + std::to_string(s));
    return subtract(h, degrade::upsample(n, s));
}

std::vector<double> singular_values(const HsiCube& cube) {
    const Eigen::MatrixXd m = unfold_mode3(cube).cast<double>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    return {sv.data(), sv.data() + sv.size()};
}

std::vector<double> energy_curve(const HsiCube& map) {
    if (map.bands() < 2) throw DimError("energy_curve: need at least 2 bands");
    const std::vector<double> sv = singular_values(map);
    double total = 0.0;
    for (double v : sv) total += v;
    if (total == 0.0) throw NumericError("energy_curve: all-zero map, ratio undefined");
    std::vector<double> curve(map.bands(), 1.0);
    double acc = 0.0;
    for (size_t k = 0; k < sv.size(); ++k) {
        acc += sv[k];
        curve[k] = acc / total;
    }
    // unfoldings with fewer singular values than bands stay saturated at 1
    for (size_t k = sv.size(); k < curve.size(); ++k) curve[k] = 1.0;
    return curve;
}

} // namespace hipandas::prior
