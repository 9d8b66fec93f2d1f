#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hipandas/common.hpp"

namespace hipandas {

/// Row-major bands x pixels matrix; one cube band per contiguous row.
using BandMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Hyperspectral cube, band-sequential storage (band plane contiguous,
/// row-major within a band). Values are float32; observed data is unit
/// scaled, intermediate network outputs may leave [0, 1] and say so via
/// the unit_scaled flag.
class HsiCube {
public:
    HsiCube() = default;
    HsiCube(int height, int width, int bands, float fill = 0.0f, bool unit_scaled = true);

    int height() const { return height_; }
    int width() const { return width_; }
    int bands() const { return bands_; }
    size_t size() const { return values_.size(); }

    float& at(int row, int col, int band) {
        return values_[(static_cast<size_t>(band) * height_ + row) * width_ + col];
    }
    float at(int row, int col, int band) const {
        return values_[(static_cast<size_t>(band) * height_ + row) * width_ + col];
    }

    std::span<float> band(int b) {
        return {values_.data() + static_cast<size_t>(b) * height_ * width_,
                static_cast<size_t>(height_) * width_};
    }
    std::span<const float> band(int b) const {
        return {values_.data() + static_cast<size_t>(b) * height_ * width_,
                static_cast<size_t>(height_) * width_};
    }

    float* data() { return values_.data(); }
    const float* data() const { return values_.data(); }

    bool operator==(const HsiCube& o) const {
        return height_ == o.height_ && width_ == o.width_ && bands_ == o.bands_ &&
               values_ == o.values_;
    }

    bool unit_scaled = true;

private:
    int height_ = 0, width_ = 0, bands_ = 0;
    std::vector<float> values_;
};

/// Single-band panchromatic image, row-major float32.
class PanImage {
public:
    PanImage() = default;
    PanImage(int height, int width, float fill = 0.0f);

    int height() const { return height_; }
    int width() const { return width_; }
    size_t size() const { return values_.size(); }

    float& at(int row, int col) { return values_[static_cast<size_t>(row) * width_ + col]; }
    float at(int row, int col) const { return values_[static_cast<size_t>(row) * width_ + col]; }

    float* data() { return values_.data(); }
    const float* data() const { return values_.data(); }

    bool operator==(const PanImage& o) const {
        return height_ == o.height_ && width_ == o.width_ && values_ == o.values_;
    }

private:
    int height_ = 0, width_ = 0;
    std::vector<float> values_;
};

/// Spectral expression coefficients U (bands x rank). Each row is a
/// probability vector: entries >= 0, row sum 1 within 1e-6.
struct CoeffMatrix {
    int bands = 0;
    int rank = 0;
    std::vector<float> entries; // row-major bands x rank

    CoeffMatrix() = default;
    CoeffMatrix(int bands_, int rank_)
        : bands(bands_), rank(rank_), entries(static_cast<size_t>(bands_) * rank_, 0.0f) {}

    float& at(int band, int k) { return entries[static_cast<size_t>(band) * rank + k]; }
    float at(int band, int k) const { return entries[static_cast<size_t>(band) * rank + k]; }

    /// Throws NumericError if some row is not a probability vector.
    void validate_rows(double tol = 1e-6) const;
};

/// Base images V (height x width x rank), stored as rank-sequential planes.
struct BaseImages {
    int height = 0;
    int width = 0;
    int rank = 0;
    std::vector<float> values;

    BaseImages() = default;
    BaseImages(int height_, int width_, int rank_)
        : height(height_), width(width_), rank(rank_),
          values(static_cast<size_t>(height_) * width_ * rank_, 0.0f) {}

    float& at(int row, int col, int k) {
        return values[(static_cast<size_t>(k) * height + row) * width + col];
    }
    float at(int row, int col, int k) const {
        return values[(static_cast<size_t>(k) * height + row) * width + col];
    }
    std::span<const float> plane(int k) const {
        return {values.data() + static_cast<size_t>(k) * height * width,
                static_cast<size_t>(height) * width};
    }
};

/// Mode-3 product: band i of the result is sum_k U[i,k] * V[:,:,k].
HsiCube mode3_product(const BaseImages& v, const CoeffMatrix& u);

/// Mode-3 unfolding: row i is band i flattened row-major. With BSQ storage
/// this is a straight copy.
BandMatrix unfold_mode3(const HsiCube& cube);

/// Inverse of unfold_mode3 for the given spatial dims.
HsiCube fold_mode3(const BandMatrix& m, int height, int width, bool unit_scaled = false);

// HICUBE v1 container: 8-byte magic "HICUBE01", u32 LE header length, JSON
// header, then height*width*bands little-endian float32, band-sequential.
HsiCube read_cube(const std::string& path);
void write_cube(const HsiCube& cube, const std::string& path);

/// PAN images travel through the same container with bands = 1.
PanImage read_pan(const std::string& path);
void write_pan(const PanImage& pan, const std::string& path);

PanImage pan_from_cube(const HsiCube& cube); // requires bands == 1
HsiCube cube_from_pan(const PanImage& pan, bool unit_scaled = true);

} // namespace hipandas
