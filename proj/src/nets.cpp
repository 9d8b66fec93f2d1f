#include "hipandas/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "hipandas/rng.hpp"

namespace hipandas::nets {

using json = nlohmann::json;

void ArchConfig::validate() const {
    if (channels < 1 || rank_gdn < 1 || rank_gsrn < 1 || hpf_layers < 1 || prn_depth < 2)
        throw ConfigError("ArchConfig: all counts must be >= 1 (prn_depth >= 2)");
    if (kernel != 3) throw ConfigError("ArchConfig: only 3x3 kernels are supported");
}

json ArchConfig::to_json() const {
    return json{{"channels", channels},     {"rank_gdn", rank_gdn},
                {"rank_gsrn", rank_gsrn},   {"hpf_layers", hpf_layers},
                {"prn_depth", prn_depth},   {"kernel", kernel},
                {"leaky_slope", leaky_slope}};
}

ArchConfig ArchConfig::from_json(const json& j) {
    ArchConfig a;
    a.channels = j.value("channels", a.channels);
    a.rank_gdn = j.value("rank_gdn", a.rank_gdn);
    a.rank_gsrn = j.value("rank_gsrn", a.rank_gsrn);
    a.hpf_layers = j.value("hpf_layers", a.hpf_layers);
    a.prn_depth = j.value("prn_depth", a.prn_depth);
    a.kernel = j.value("kernel", a.kernel);
    a.leaky_slope = j.value("leaky_slope", a.leaky_slope);
    a.validate();
    return a;
}

size_t ModelState::parameter_count() const {
    size_t n = 0;
    for (const auto& [name, t] : params) n += t.size();
    return n;
}

std::vector<std::pair<std::string, std::pair<int, int>>> param_layout(const ArchConfig& arch,
                                                                      int bands, bool low_rank) {
    std::vector<std::pair<std::string, std::pair<int, int>>> layout;
    const int c = arch.channels;
    auto branch = [&](const std::string& net, int rank) {
        if (low_rank) {
            layout.push_back({net + ".u_sconv1", {bands, bands}});
            layout.push_back({net + ".u_sconv2", {bands, bands}});
        }
        layout.push_back({net + ".v_head_hs", {c, bands}});
        layout.push_back({net + ".v_head_pan", {c, 1}});
        for (int i = 0; i < arch.hpf_layers; ++i) {
            layout.push_back({net + ".hpf" + std::to_string(i + 1) + ".conv_a", {c, 2 * c}});
            layout.push_back({net + ".hpf" + std::to_string(i + 1) + ".conv_b", {c, 2 * c}});
        }
        layout.push_back({net + ".v_tail", {low_rank ? rank : bands, c}});
    };
    branch("gdn", arch.rank_gdn);
    branch("gsrn", arch.rank_gsrn);
    layout.push_back({"prn.conv1", {c, bands}});
    for (int i = 2; i < arch.prn_depth; ++i)
        layout.push_back({"prn.conv" + std::to_string(i), {c, c}});
    layout.push_back({"prn.conv" + std::to_string(arch.prn_depth), {1, c}});
    return layout;
}

ModelState init_state(const ArchConfig& arch, int bands, uint64_t seed, bool low_rank) {
    arch.validate();
    if (bands <= std::max(arch.rank_gdn, arch.rank_gsrn))
        throw ConfigError("init_state: bands (" + std::to_string(bands) +
                          ") must exceed both ranks (" + std::to_string(arch.rank_gdn) + ", " +
                          std::to_string(arch.rank_gsrn) + ")");
    ModelState st;
    st.arch = arch;
    st.bands = bands;
    st.low_rank = low_rank;

    Rng rng(seed);
    for (const auto& [name, io] : param_layout(arch, bands, low_rank)) {
        const auto [out_c, in_c] = io;
        ad::Tensor<float> w(out_c, in_c, 9);
        const double bound = std::sqrt(6.0 / (in_c * 9));
        for (float& x : w.v) x = static_cast<float>(rng.uniform(-bound, bound));
        st.params.emplace(name + ".weight", std::move(w));
        st.params.emplace(name + ".bias", ad::Tensor<float>(out_c, 1, 1));
    }
    return st;
}

void absorb_params(ModelState& state, const ParamMap<float>& pm) {
    for (auto& [name, tensor] : state.params) tensor = pm.at(name)->value;
}

// ------------------------------------------------------------ state file
// Layout: magic "HIPSTAT1", u32 LE manifest length, JSON manifest, then one
// little-endian float32 blob per parameter in manifest order.

namespace {
constexpr char kStateMagic[8] = {'H', 'I', 'P', 'S', 'T', 'A', 'T', '1'};
}

void save_state(const ModelState& state, const std::string& path) {
    json manifest = {{"version", kVersion},
                     {"arch", state.arch.to_json()},
                     {"bands", state.bands},
                     {"low_rank", state.low_rank}};
    json plist = json::array();
    for (const auto& [name, t] : state.params)
        plist.push_back({{"name", name}, {"shape", {t.c, t.h, t.w}}});
    manifest["params"] = plist;
    const std::string ms = manifest.dump();
    const uint32_t mlen = static_cast<uint32_t>(ms.size());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f.write(kStateMagic, 8);
    f.write(reinterpret_cast<const char*>(&mlen), 4);
    f.write(ms.data(), mlen);
    for (const auto& [name, t] : state.params)
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * 4));
    if (!f) throw FormatError("short write: " + path);
}

ModelState load_state(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open: " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0)
        throw FormatError(path + ": bad state magic at byte offset 0");
    uint32_t mlen = 0;
    f.read(reinterpret_cast<char*>(&mlen), 4);
    std::string ms(mlen, '\0');
    if (!f.read(ms.data(), mlen)) throw FormatError(path + ": truncated manifest");
    json manifest = json::parse(ms);

    ModelState st;
    st.arch = ArchConfig::from_json(manifest.at("arch"));
    st.bands = manifest.at("bands").get<int>();
    st.low_rank = manifest.at("low_rank").get<bool>();
    for (const auto& entry : manifest.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<int>>();
        ad::Tensor<float> t(shape.at(0), shape.at(1), shape.at(2));
        if (!f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 4)))
            throw FormatError(path + ": truncated blob for parameter " + name);
        st.params.emplace(name, std::move(t));
    }
    return st;
}

// ----------------------------------------------------------------- graphs

template <typename T>
std::pair<ad::Var<T>, ad::Var<T>> hpf_layer(const ad::Var<T>& hs, const ad::Var<T>& pan,
                                            const ad::Var<T>& wa, const ad::Var<T>& ba,
                                            const ad::Var<T>& wb, const ad::Var<T>& bb,
                                            T slope) {
    if (hs->value.h != pan->value.h || hs->value.w != pan->value.w ||
        hs->value.c != pan->value.c)
        throw DimError("hpf_layer: feature shape mismatch");
    auto cat = ad::concat_c(hs, pan);
    auto hs_out = ad::leaky_relu(ad::conv2d(cat, wa, ba), slope);
    auto pan_out = ad::leaky_relu(ad::conv2d(cat, wb, bb), slope);
    return {hs_out, pan_out};
}

namespace {

/// Shared factorized two-branch body of GDN and GSRN. `hs` is the network's
/// HS-resolution input, `pan` the guide at the same resolution.
template <typename T>
struct FactorizedOut {
    ad::Var<T> raw; // tail output after sigmoid, (rank, h, w) or (bands, h, w)
    ad::Var<T> u;   // null when low_rank is off
};

template <typename T>
FactorizedOut<T> factorized_body(const ModelState& state, const ParamMap<T>& pm,
                                 const std::string& net, int rank, const ad::Var<T>& hs,
                                 const ad::Var<T>& pan) {
    const T slope = static_cast<T>(state.arch.leaky_slope);
    FactorizedOut<T> out;

    if (state.low_rank) {
        // U-branch: two strided convolutions keep the band width, adaptive
        // average pooling to an r x 1 grid, softmax over r per band.
        auto a1 = ad::leaky_relu(
            ad::conv2d(hs, pm.at(net + ".u_sconv1.weight"), pm.at(net + ".u_sconv1.bias"), 2),
            slope);
        auto a2 = ad::leaky_relu(
            ad::conv2d(a1, pm.at(net + ".u_sconv2.weight"), pm.at(net + ".u_sconv2.bias"), 2),
            slope);
        out.u = ad::softmax_h(ad::adaptive_avg_pool(a2, rank, 1));
    }

    // V-branch: embed both inputs, fuse through HPF layers, project to the
    // base images with a sigmoid tail.
    auto f_hs = ad::leaky_relu(
        ad::conv2d(hs, pm.at(net + ".v_head_hs.weight"), pm.at(net + ".v_head_hs.bias")), slope);
    auto f_pan = ad::leaky_relu(
        ad::conv2d(pan, pm.at(net + ".v_head_pan.weight"), pm.at(net + ".v_head_pan.bias")),
        slope);
    for (int i = 1; i <= state.arch.hpf_layers; ++i) {
        const std::string base = net + ".hpf" + std::to_string(i);
        std::tie(f_hs, f_pan) =
            hpf_layer(f_hs, f_pan, pm.at(base + ".conv_a.weight"), pm.at(base + ".conv_a.bias"),
                      pm.at(base + ".conv_b.weight"), pm.at(base + ".conv_b.bias"), slope);
    }
    out.raw = ad::sigmoid(
        ad::conv2d(f_hs, pm.at(net + ".v_tail.weight"), pm.at(net + ".v_tail.bias")));
    return out;
}

} // namespace

template <typename T>
GdnGraph<T> gdn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& n,
                      const ad::Var<T>& q) {
    if (n->value.h != q->value.h || n->value.w != q->value.w)
        throw DimError("gdn: N and Q must share spatial dims");
    if (n->value.c != state.bands) throw DimError("gdn: band count mismatch with state");
    auto body = factorized_body(state, pm, "gdn", state.arch.rank_gdn, n, q);
    GdnGraph<T> g;
    if (state.low_rank) {
        g.u = body.u;
        g.v = body.raw;
        g.l_hat = ad::mode3(g.v, g.u);
    } else {
        g.l_hat = body.raw;
    }
    return g;
}

template <typename T>
GsrnGraph<T> gsrn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& l_hat,
                        const ad::Var<T>& pan, int s) {
    if (pan->value.h != l_hat->value.h * s || pan->value.w != l_hat->value.w * s)
        throw DimError("gsrn: PAN dims must be s x the HS dims (s = " + std::to_string(s) + ")");
    GsrnGraph<T> g;
    g.upsampled = ad::upsample_bicubic(l_hat, s);
    auto body = factorized_body(state, pm, "gsrn", state.arch.rank_gsrn, g.upsampled, pan);
    // Detail maps are signed, so the sigmoid output is shifted to [-0.5, 0.5].
    auto signed_base = ad::add_scalar(body.raw, static_cast<T>(-0.5));
    g.detail = state.low_rank ? ad::mode3(signed_base, body.u) : signed_base;
    g.h_hat = ad::add(g.upsampled, g.detail);
    return g;
}

template <typename T>
ad::Var<T> prn_graph(const ModelState& state, const ParamMap<T>& pm, const ad::Var<T>& cube) {
    const T slope = static_cast<T>(state.arch.leaky_slope);
    auto x = cube;
    for (int i = 1; i < state.arch.prn_depth; ++i) {
        const std::string base = "prn.conv" + std::to_string(i);
        x = ad::leaky_relu(ad::conv2d(x, pm.at(base + ".weight"), pm.at(base + ".bias")), slope);
    }
    const std::string last = "prn.conv" + std::to_string(state.arch.prn_depth);
    return ad::conv2d(x, pm.at(last + ".weight"), pm.at(last + ".bias"));
}

template GdnGraph<float> gdn_graph(const ModelState&, const ParamMap<float>&,
                                   const ad::Var<float>&, const ad::Var<float>&);
template GdnGraph<double> gdn_graph(const ModelState&, const ParamMap<double>&,
                                    const ad::Var<double>&, const ad::Var<double>&);
template GsrnGraph<float> gsrn_graph(const ModelState&, const ParamMap<float>&,
                                     const ad::Var<float>&, const ad::Var<float>&, int);
template GsrnGraph<double> gsrn_graph(const ModelState&, const ParamMap<double>&,
                                      const ad::Var<double>&, const ad::Var<double>&, int);
template ad::Var<float> prn_graph(const ModelState&, const ParamMap<float>&,
                                  const ad::Var<float>&);
template ad::Var<double> prn_graph(const ModelState&, const ParamMap<double>&,
                                   const ad::Var<double>&);
template std::pair<ad::Var<float>, ad::Var<float>> hpf_layer(const ad::Var<float>&,
                                                             const ad::Var<float>&,
                                                             const ad::Var<float>&,
                                                             const ad::Var<float>&,
                                                             const ad::Var<float>&,
                                                             const ad::Var<float>&, float);
template std::pair<ad::Var<double>, ad::Var<double>> hpf_layer(const ad::Var<double>&,
                                                               const ad::Var<double>&,
                                                               const ad::Var<double>&,
                                                               const ad::Var<double>&,
                                                               const ad::Var<double>&,
                                                               const ad::Var<double>&, double);

// ------------------------------------------------------------- evaluation

ad::Tensor<float> to_tensor(const HsiCube& cube) {
    ad::Tensor<float> t(cube.bands(), cube.height(), cube.width());
    std::memcpy(t.data(), cube.data(), cube.size() * sizeof(float));
    return t;
}

ad::Tensor<float> to_tensor(const PanImage& pan) {
    ad::Tensor<float> t(1, pan.height(), pan.width());
    std::memcpy(t.data(), pan.data(), pan.size() * sizeof(float));
    return t;
}

HsiCube cube_from_tensor(const ad::Tensor<float>& t, bool unit_scaled) {
    HsiCube cube(t.h, t.w, t.c, 0.0f, unit_scaled);
    std::memcpy(cube.data(), t.data(), t.size() * sizeof(float));
    return cube;
}

PanImage pan_from_tensor(const ad::Tensor<float>& t) {
    if (t.c != 1) throw DimError("pan_from_tensor: expected a single channel");
    PanImage pan(t.h, t.w);
    std::memcpy(pan.data(), t.data(), t.size() * sizeof(float));
    return pan;
}

GdnOutput gdn_forward(const ModelState& state, const HsiCube& n, const PanImage& q) {
    auto pm = lift_params<float>(state, false);
    auto g = gdn_graph(state, pm, ad::constant(to_tensor(n)), ad::constant(to_tensor(q)));
    GdnOutput out;
    out.l_hat = cube_from_tensor(g.l_hat->value);
    if (state.low_rank) {
        const auto& ut = g.u->value; // (bands, rank, 1)
        out.u = CoeffMatrix(ut.c, ut.h);
        std::memcpy(out.u.entries.data(), ut.data(), ut.size() * sizeof(float));
        const auto& vt = g.v->value; // (rank, h, w)
        out.v = BaseImages(vt.h, vt.w, vt.c);
        std::memcpy(out.v.values.data(), vt.data(), vt.size() * sizeof(float));
    }
    return out;
}

HsiCube gsrn_forward(const ModelState& state, const HsiCube& l_hat, const PanImage& p, int s) {
    auto pm = lift_params<float>(state, false);
    auto g = gsrn_graph(state, pm, ad::constant(to_tensor(l_hat)), ad::constant(to_tensor(p)), s);
    return cube_from_tensor(g.h_hat->value);
}

PanImage prn_forward(const ModelState& state, const HsiCube& cube) {
    auto pm = lift_params<float>(state, false);
    auto out = prn_graph(state, pm, ad::constant(to_tensor(cube)));
    return pan_from_tensor(out->value);
}

} // namespace hipandas::nets
