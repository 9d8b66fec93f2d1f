#include "hipandas/train.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hipandas/degrade.hpp"
#include "hipandas/kernels.hpp"

namespace hipandas::train {

using json = nlohmann::json;

json AblationFlags::to_json() const {
    return json{{"drop_LD", drop_LD},         {"drop_LS", drop_LS},
                {"drop_LP_LQ", drop_LP_LQ},   {"skip_stage1", skip_stage1},
                {"no_lowrank", no_lowrank},   {"no_pan", no_pan},
                {"denoise_only", denoise_only}};
}

AblationFlags AblationFlags::from_json(const json& j) {
    AblationFlags f;
    f.drop_LD = j.value("drop_LD", false);
    f.drop_LS = j.value("drop_LS", false);
    f.drop_LP_LQ = j.value("drop_LP_LQ", false);
    f.skip_stage1 = j.value("skip_stage1", false);
    f.no_lowrank = j.value("no_lowrank", false);
    f.no_pan = j.value("no_pan", false);
    f.denoise_only = j.value("denoise_only", false);
    return f;
}

AblationFlags AblationFlags::from_name(const std::string& name) {
    AblationFlags f;
    if (name == "full") return f;
    if (name == "drop_LD") f.drop_LD = true;
    else if (name == "drop_LS") f.drop_LS = true;
    else if (name == "drop_LP_LQ") f.drop_LP_LQ = true;
    else if (name == "skip_stage1") f.skip_stage1 = true;
    else if (name == "no_lowrank") f.no_lowrank = true;
    else if (name == "no_pan") f.no_pan = true;
    else if (name == "denoise_only") f.denoise_only = true;
    else throw ConfigError("unknown ablation name: " + name);
    return f;
}

std::string AblationFlags::name() const {
    std::string s;
    auto append = [&](bool on, const char* n) {
        if (on) s += (s.empty() ? "" : "+") + std::string(n);
    };
    append(drop_LD, "drop_LD");
    append(drop_LS, "drop_LS");
    append(drop_LP_LQ, "drop_LP_LQ");
    append(skip_stage1, "skip_stage1");
    append(no_lowrank, "no_lowrank");
    append(no_pan, "no_pan");
    append(denoise_only, "denoise_only");
    return s.empty() ? "full" : s;
}

void TrainConfig::validate() const {
    if (stage1_epochs < 0 || stage2_epochs < 0)
        throw ConfigError("TrainConfig: epochs must be >= 0");
    if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be > 0");
}

json TrainConfig::to_json() const {
    return json{{"stage1_epochs", stage1_epochs},
                {"stage2_epochs", stage2_epochs},
                {"learning_rate", learning_rate},
                {"beta1", beta1},
                {"beta2", beta2},
                {"eps", eps},
                {"seed", seed},
                {"ablation", ablation.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig tc;
    tc.stage1_epochs = j.value("stage1_epochs", tc.stage1_epochs);
    tc.stage2_epochs = j.value("stage2_epochs", tc.stage2_epochs);
    tc.learning_rate = j.value("learning_rate", tc.learning_rate);
    tc.beta1 = j.value("beta1", tc.beta1);
    tc.beta2 = j.value("beta2", tc.beta2);
    tc.eps = j.value("eps", tc.eps);
    tc.seed = j.value("seed", tc.seed);
    if (j.contains("ablation")) tc.ablation = AblationFlags::from_json(j["ablation"]);
    tc.validate();
    return tc;
}

std::string LossTrace::to_csv() const {
    std::ostringstream os;
    os << "epoch,L_D,L_S,L_Q,L_P,total,stage\n";
    os.precision(17);
    for (const TraceRow& r : rows)
        os << r.epoch << ',' << r.l_d << ',' << r.l_s << ',' << r.l_q << ',' << r.l_p << ','
           << r.total << ',' << r.stage << '\n';
    return os.str();
}

void LossTrace::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f << to_csv();
}

namespace {

std::string abort_message(int epoch, const TraceRow& r) {
    std::ostringstream os;
    os << "non-finite loss at epoch " << epoch << " (stage " << r.stage << "): L_D=" << r.l_d
       << " L_S=" << r.l_s << " L_Q=" << r.l_q << " L_P=" << r.l_p << " total=" << r.total;
    return os.str();
}

} // namespace

TrainAbort::TrainAbort(int epoch_, const TraceRow& row)
    : NumericError(abort_message(epoch_, row)), epoch(epoch_), components(row) {}

// ----------------------------------------------------------------- losses

double loss_denoise(const HsiCube& n, const HsiCube& l_hat) {
    if (n.height() != l_hat.height() || n.width() != l_hat.width() || n.bands() != l_hat.bands())
        throw DimError("loss_denoise: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < n.size(); ++i)
        acc += std::abs(static_cast<double>(n.data()[i]) - static_cast<double>(l_hat.data()[i]));
    return acc / static_cast<double>(n.size());
}

double loss_pan_highfreq(const PanImage& pan_ref, const PanImage& pan_hat) {
    if (pan_ref.height() != pan_hat.height() || pan_ref.width() != pan_hat.width())
        throw DimError("loss_pan_highfreq: dimension mismatch");
    const int h = pan_ref.height(), w = pan_ref.width();
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<double> a(n), b(n), gx1(n), gy1(n), gx2(n), gy2(n);
    for (size_t i = 0; i < n; ++i) {
        a[i] = pan_ref.data()[i];
        b[i] = pan_hat.data()[i];
    }
    kernels::sobel(a.data(), h, w, gx1.data(), gy1.data());
    kernels::sobel(b.data(), h, w, gx2.data(), gy2.data());
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += std::abs(gx1[i] - gx2[i]) + std::abs(gy1[i] - gy2[i]);
    return acc / static_cast<double>(2 * n);
}

double loss_sr_stage1(const nets::ModelState& state, const HsiCube& l_hat, const PanImage& q,
                      int s) {
    if (l_hat.height() % s != 0 || l_hat.width() % s != 0)
        throw DimError("loss_sr_stage1: dims not divisible by ratio");
    const HsiCube down = degrade::downsample(l_hat, s);
    const HsiCube l_prime = nets::gsrn_forward(state, down, q, s);
    double acc = 0.0;
    for (size_t i = 0; i < l_hat.size(); ++i) {
        const double d =
            static_cast<double>(l_hat.data()[i]) - static_cast<double>(l_prime.data()[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(l_hat.size());
}

double loss_sr_stage2(const HsiCube& h_hat, const HsiCube& l_hat, int s) {
    if (h_hat.height() != l_hat.height() * s || h_hat.width() != l_hat.width() * s ||
        h_hat.bands() != l_hat.bands())
        throw DimError("loss_sr_stage2: H dims must be s x the L dims");
    const HsiCube down = degrade::downsample(h_hat, s);
    double acc = 0.0;
    for (size_t i = 0; i < down.size(); ++i) {
        const double d =
            static_cast<double>(down.data()[i]) - static_cast<double>(l_hat.data()[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(down.size());
}

// ------------------------------------------------------------------- adam

namespace {

/// Adam with per-parameter step counts; moment buffers in double. Only
/// parameters that received a gradient this step are updated.
class Adam {
public:
    Adam(double lr, double b1, double b2, double eps) : lr_(lr), b1_(b1), b2_(b2), eps_(eps) {}

    void step(nets::ParamMap<float>& pm) {
        for (auto& [name, var] : pm.vars) {
            if (!var->has_grad()) continue;
            auto& slot = slots_[name];
            if (slot.m.empty()) {
                slot.m.assign(var->value.size(), 0.0);
                slot.v.assign(var->value.size(), 0.0);
            }
            slot.t += 1;
            const double c1 = 1.0 - std::pow(b1_, slot.t);
            const double c2 = 1.0 - std::pow(b2_, slot.t);
            float* p = var->value.data();
            const float* g = var->grad.data();
            for (size_t i = 0; i < var->value.size(); ++i) {
                const double gi = g[i];
                slot.m[i] = b1_ * slot.m[i] + (1.0 - b1_) * gi;
                slot.v[i] = b2_ * slot.v[i] + (1.0 - b2_) * gi * gi;
                const double mhat = slot.m[i] / c1;
                const double vhat = slot.v[i] / c2;
                p[i] = static_cast<float>(p[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

private:
    struct Slot {
        long t = 0;
        std::vector<double> m, v;
    };
    double lr_, b1_, b2_, eps_;
    std::map<std::string, Slot> slots_;
};

void zero_grads(nets::ParamMap<float>& pm) {
    for (auto& [name, var] : pm.vars) var->grad = ad::Tensor<float>();
}

double component(const ad::Var<float>& v) {
    return v ? static_cast<double>(ad::scalar(v)) : 0.0;
}

} // namespace

// ------------------------------------------------------------ restoration

RestorationResult run_restoration(const HsiCube& n, const PanImage& p, const PanImage& q,
                                  const nets::ArchConfig& arch, const TrainConfig& tc,
                                  const EpochObserver& observer) {
    tc.validate();
    if (q.height() != n.height() || q.width() != n.width())
        throw DimError("run_restoration: Q must share the LRHS spatial dims");
    if (p.height() % n.height() != 0 || p.width() % n.width() != 0)
        throw DimError("run_restoration: PAN dims must be an integer multiple of the LRHS dims");
    const int s = p.height() / n.height();
    if (s < 2 || p.width() != n.width() * s)
        throw DimError("run_restoration: inconsistent resolution ratio");
    const AblationFlags& ab = tc.ablation;
    if (!ab.denoise_only && (n.height() % s != 0 || n.width() % s != 0))
        throw DimError("run_restoration: LRHS dims must divide by the ratio for stage-1 training");

    nets::ModelState state = nets::init_state(arch, n.bands(), tc.seed, !ab.no_lowrank);
    auto pm = nets::lift_params<float>(state, true);
    Adam adam(tc.learning_rate, tc.beta1, tc.beta2, tc.eps);

    // Constant inputs. Under the no-PAN ablation the fusion guides are
    // zeroed while the PAN loss targets keep the observed images.
    const auto n_in = ad::constant(nets::to_tensor(n));
    const auto q_guide = ad::constant(ab.no_pan ? ad::Tensor<float>(1, q.height(), q.width())
                                                : nets::to_tensor(q));
    const auto p_guide = ad::constant(ab.no_pan ? ad::Tensor<float>(1, p.height(), p.width())
                                                : nets::to_tensor(p));
    const auto sobel_q = ad::sobel_pair(ad::constant(nets::to_tensor(q)));
    const auto sobel_p = ad::sobel_pair(ad::constant(nets::to_tensor(p)));

    LossTrace trace;
    int epoch = 0;

    auto record = [&](int stage, const ad::Var<float>& ld, const ad::Var<float>& ls,
                      const ad::Var<float>& lq, const ad::Var<float>& lp, double total) {
        TraceRow row{epoch, stage, component(ld), component(ls), component(lq), component(lp),
                     total};
        const bool finite = std::isfinite(row.l_d) && std::isfinite(row.l_s) &&
                            std::isfinite(row.l_q) && std::isfinite(row.l_p) &&
                            std::isfinite(row.total);
        trace.rows.push_back(row);
        if (observer) observer(row);
        if (!finite) throw TrainAbort(epoch, row);
        ++epoch;
    };

    auto sum_terms = [](std::initializer_list<ad::Var<float>> terms) {
        ad::Var<float> total;
        for (const auto& t : terms) {
            if (!t) continue;
            total = total ? ad::add(total, t) : t;
        }
        return total;
    };

    const int stage1_epochs = ab.skip_stage1 ? 0 : tc.stage1_epochs;
    for (int it = 0; it < stage1_epochs; ++it) {
        zero_grads(pm);
        auto gdn = nets::gdn_graph(state, pm, n_in, q_guide);
        ad::Var<float> ld, ls, lq;
        if (!ab.drop_LD) ld = ad::l1_loss(gdn.l_hat, n_in);
        if (!ab.denoise_only) {
            if (!ab.drop_LS) {
                auto lr_input = ad::downsample_area(gdn.l_hat, s);
                auto gsrn = nets::gsrn_graph(state, pm, lr_input, q_guide, s);
                ls = ad::mse_loss(gsrn.h_hat, ad::detach(gdn.l_hat));
            }
            if (!ab.drop_LP_LQ) {
                auto q_hat = nets::prn_graph(state, pm, gdn.l_hat);
                lq = ad::l1_loss(ad::sobel_pair(q_hat), sobel_q);
            }
        }
        auto total = sum_terms({ld, ls, lq});
        record(1, ld, ls, lq, nullptr, component(total));
        if (total && total->track) {
            ad::backward(total);
            adam.step(pm);
        }
    }

    for (int it = 0; it < tc.stage2_epochs; ++it) {
        zero_grads(pm);
        auto gdn = nets::gdn_graph(state, pm, n_in, q_guide);
        ad::Var<float> ld, ls, lq, lp;
        if (!ab.drop_LD) ld = ad::l1_loss(gdn.l_hat, n_in);
        if (!ab.denoise_only) {
            auto gsrn = nets::gsrn_graph(state, pm, gdn.l_hat, p_guide, s);
            if (!ab.drop_LS)
                ls = ad::mse_loss(ad::downsample_area(gsrn.h_hat, s), ad::detach(gdn.l_hat));
            if (!ab.drop_LP_LQ) {
                auto q_hat = nets::prn_graph(state, pm, gdn.l_hat);
                lq = ad::l1_loss(ad::sobel_pair(q_hat), sobel_q);
                auto p_hat = nets::prn_graph(state, pm, gsrn.h_hat);
                lp = ad::l1_loss(ad::sobel_pair(p_hat), sobel_p);
            }
        }
        auto total = sum_terms({ld, ls, lq, lp});
        record(2, ld, ls, lq, lp, component(total));
        if (total && total->track) {
            ad::backward(total);
            adam.step(pm);
        }
    }

    nets::absorb_params(state, pm);

    RestorationResult result;
    result.ratio = s;
    result.trace = std::move(trace);
    {
        auto eval_pm = nets::lift_params<float>(state, false);
        auto gdn = nets::gdn_graph(state, eval_pm, n_in, q_guide);
        result.l_hat = nets::cube_from_tensor(gdn.l_hat->value);
        if (!ab.denoise_only) {
            auto gsrn = nets::gsrn_graph(state, eval_pm, gdn.l_hat, p_guide, s);
            result.h_hat = nets::cube_from_tensor(gsrn.h_hat->value);
        }
    }
    result.state = std::move(state);
    return result;
}

} // namespace hipandas::train
