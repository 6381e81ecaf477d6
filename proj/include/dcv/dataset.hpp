#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcv/rng.hpp"

namespace dcv {

using Vec = Eigen::VectorXd;

// Grayscale images with intensities in [0, 1], row-major.
struct ImageDataset {
    int rows = 0;
    int cols = 0;
    std::vector<Vec> images;
    std::vector<std::uint8_t> labels;  // empty when no label file was given

    std::size_t size() const { return images.size(); }
    int pixels() const { return rows * cols; }
};

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Reads big-endian IDX image (and optional label) files. Throws
// std::runtime_error on bad magic, truncation or count mismatch.
ImageDataset load_mnist_idx(const std::string& images_path,
                            const std::optional<std::string>& labels_path = std::nullopt);

// Writes raw bytes in IDX layout; used for fixtures and round trips.
void write_idx_images(const std::string& path, int rows, int cols, const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// Fresh Bernoulli(pixel) draw per call: 1[u < p].
Vec binarize(const Vec& image, Rng& rng);
// Affine map [0,1] -> [-1,1].
Vec center(const Vec& image);

// Images made by overlaying random horizontal and vertical bars on a
// side x side grid (2*side bar patterns, each on with probability
// 1/side); bar pixels have intensity `on`, the rest `off`.
ImageDataset synthetic_bars(int count, int side, Rng& rng, double on = 0.95, double off = 0.05);

}  // namespace dcv
