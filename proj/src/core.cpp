#include "hipandas/core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "HICUBE i/o assumes a little-endian host");

namespace hipandas {

using json = nlohmann::json;

HsiCube::HsiCube(int height, int width, int bands, float fill, bool unit_scaled_)
    : unit_scaled(unit_scaled_), height_(height), width_(width), bands_(bands),
      values_(static_cast<size_t>(height) * width * bands, fill) {
    if (height < 1 || width < 1 || bands < 1)
        throw DimError("HsiCube: dims must be >= 1, got " + std::to_string(height) + "x" +
                       std::to_string(width) + "x" + std::to_string(bands));
}

PanImage::PanImage(int height, int width, float fill)
    : height_(height), width_(width), values_(static_cast<size_t>(height) * width, fill) {
    if (height < 1 || width < 1)
        throw DimError("PanImage: dims must be >= 1, got " + std::to_string(height) + "x" +
                       std::to_string(width));
}

void CoeffMatrix::validate_rows(double tol) const {
    for (int i = 0; i < bands; ++i) {
        double sum = 0.0;
        for (int k = 0; k < rank; ++k) {
            const float e = at(i, k);
            if (e < 0.0f)
                throw NumericError("CoeffMatrix: negative entry in row " + std::to_string(i));
            sum += e;
        }
        if (std::abs(sum - 1.0) > tol)
            throw NumericError("CoeffMatrix: row " + std::to_string(i) + " sums to " +
                               std::to_string(sum));
    }
}

HsiCube mode3_product(const BaseImages& v, const CoeffMatrix& u) {
    if (v.rank != u.rank)
        throw DimError("mode3_product: rank mismatch, V has " + std::to_string(v.rank) +
                       ", U has " + std::to_string(u.rank));
    HsiCube out(v.height, v.width, u.bands, 0.0f, false);
    const Eigen::Index pixels = static_cast<Eigen::Index>(v.height) * v.width;
    Eigen::Map<const BandMatrix> umat(u.entries.data(), u.bands, u.rank);
    Eigen::Map<const BandMatrix> vmat(v.values.data(), v.rank, pixels);
    Eigen::Map<BandMatrix> omat(out.data(), u.bands, pixels);
    omat.noalias() = umat * vmat;
    return out;
}

BandMatrix unfold_mode3(const HsiCube& cube) {
    const Eigen::Index pixels = static_cast<Eigen::Index>(cube.height()) * cube.width();
    return Eigen::Map<const BandMatrix>(cube.data(), cube.bands(), pixels);
}

HsiCube fold_mode3(const BandMatrix& m, int height, int width, bool unit_scaled) {
    if (m.cols() != static_cast<Eigen::Index>(height) * width)
        throw DimError("fold_mode3: " + std::to_string(m.cols()) + " pixels do not refold to " +
                       std::to_string(height) + "x" + std::to_string(width));
    HsiCube cube(height, width, static_cast<int>(m.rows()), 0.0f, unit_scaled);
    std::memcpy(cube.data(), m.data(), sizeof(float) * m.size());
    return cube;
}

namespace {

constexpr char kMagic[8] = {'H', 'I', 'C', 'U', 'B', 'E', '0', '1'};

void write_container(const float* values, size_t count, int height, int width, int bands,
                     bool unit_scaled, const std::string& path) {
    json header = {{"height", height}, {"width", width},   {"bands", bands},
                   {"dtype", "f32"},   {"layout", "bsq"},  {"unit_scaled", unit_scaled}};
    const std::string hs = header.dump();
    const uint32_t hlen = static_cast<uint32_t>(hs.size());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f.write(kMagic, 8);
    f.write(reinterpret_cast<const char*>(&hlen), 4);
    f.write(hs.data(), hlen);
    f.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * 4));
    if (!f) throw FormatError("short write: " + path);
}

HsiCube read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open: " + path);
    f.seekg(0, std::ios::end);
    const uint64_t fsize = static_cast<uint64_t>(f.tellg());
    f.seekg(0);

    char magic[8];
    if (fsize < 12 || !f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (expected HICUBE01)");
    uint32_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 4);
    if (fsize < 12u + hlen)
        throw FormatError(path + ": header length " + std::to_string(hlen) +
                          " exceeds file size at byte offset 8");
    std::string hs(hlen, '\0');
    f.read(hs.data(), hlen);

    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw FormatError(path + ": invalid JSON header at byte offset 12: " + e.what());
    }
    const int height = header.at("height").get<int>();
    const int width = header.at("width").get<int>();
    const int bands = header.at("bands").get<int>();
    if (header.at("dtype").get<std::string>() != "f32")
        throw FormatError(path + ": unsupported dtype " + header.at("dtype").get<std::string>());
    if (header.at("layout").get<std::string>() != "bsq")
        throw FormatError(path + ": unsupported layout " + header.at("layout").get<std::string>());
    if (height < 1 || width < 1 || bands < 1)
        throw FormatError(path + ": non-positive dims in header");

    const uint64_t expected = static_cast<uint64_t>(height) * width * bands * 4;
    const uint64_t actual = fsize - 12 - hlen;
    if (actual != expected)
        throw FormatError(path + ": payload length mismatch at byte offset " +
                          std::to_string(12 + hlen) + ": expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(actual));

    HsiCube cube(height, width, bands, 0.0f, header.value("unit_scaled", true));
    f.read(reinterpret_cast<char*>(cube.data()), static_cast<std::streamsize>(expected));
    if (!f) throw FormatError(path + ": short read of payload");

    const float* v = cube.data();
    for (size_t i = 0; i < cube.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw FormatError(path + ": non-finite value at byte offset " +
                              std::to_string(12 + hlen + i * 4));
    }
    return cube;
}

} // namespace

HsiCube read_cube(const std::string& path) { return read_container(path); }

void write_cube(const HsiCube& cube, const std::string& path) {
    const float* v = cube.data();
    for (size_t i = 0; i < cube.size(); ++i)
        if (!std::isfinite(v[i]))
            throw FormatError("write_cube: non-finite value at flat index " + std::to_string(i));
    write_container(cube.data(), cube.size(), cube.height(), cube.width(), cube.bands(),
                    cube.unit_scaled, path);
}

PanImage read_pan(const std::string& path) {
    HsiCube cube = read_container(path);
    if (cube.bands() != 1)
        throw FormatError(path + ": expected a single-band PAN container, got " +
                          std::to_string(cube.bands()) + " bands");
    return pan_from_cube(cube);
}

void write_pan(const PanImage& pan, const std::string& path) {
    write_cube(cube_from_pan(pan), path);
}

PanImage pan_from_cube(const HsiCube& cube) {
    if (cube.bands() != 1) throw DimError("pan_from_cube: cube has more than one band");
    PanImage pan(cube.height(), cube.width());
    std::memcpy(pan.data(), cube.data(), sizeof(float) * cube.size());
    return pan;
}

HsiCube cube_from_pan(const PanImage& pan, bool unit_scaled) {
    HsiCube cube(pan.height(), pan.width(), 1, 0.0f, unit_scaled);
    std::memcpy(cube.data(), pan.data(), sizeof(float) * pan.size());
    return cube;
}

} // namespace hipandas
