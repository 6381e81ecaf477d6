#include "dcv/dataset.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

namespace dcv {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw std::runtime_error(path + ": truncated IDX header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                                static_cast<char>(v)};
    out.write(b.data(), 4);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

}  // namespace

ImageDataset load_mnist_idx(const std::string& images_path, const std::optional<std::string>& labels_path) {
    std::ifstream in = open_binary(images_path);
    const std::uint32_t magic = read_be32(in, images_path);
    if (magic != kIdxImagesMagic) throw std::runtime_error(images_path + ": bad IDX image magic");
    const std::uint32_t n = read_be32(in, images_path);
    const std::uint32_t rows = read_be32(in, images_path);
    const std::uint32_t cols = read_be32(in, images_path);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
        throw std::runtime_error(images_path + ": implausible image dimensions");

    ImageDataset ds;
    ds.rows = static_cast<int>(rows);
    ds.cols = static_cast<int>(cols);
    ds.images.reserve(n);
    std::vector<unsigned char> buf(std::size_t{rows} * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw std::runtime_error(images_path + ": truncated image data");
        Vec img(static_cast<Eigen::Index>(buf.size()));
        for (std::size_t p = 0; p < buf.size(); ++p) img[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
        ds.images.push_back(std::move(img));
    }

    if (labels_path) {
        std::ifstream lin = open_binary(*labels_path);
        if (read_be32(lin, *labels_path) != kIdxLabelsMagic)
            throw std::runtime_error(*labels_path + ": bad IDX label magic");
        const std::uint32_t m = read_be32(lin, *labels_path);
        if (m != n) throw std::runtime_error(*labels_path + ": label count does not match image count");
        ds.labels.resize(m);
        if (!lin.read(reinterpret_cast<char*>(ds.labels.data()), static_cast<std::streamsize>(m)))
            throw std::runtime_error(*labels_path + ": truncated label data");
    }
    return ds;
}

void write_idx_images(const std::string& path, int rows, int cols, const std::vector<std::uint8_t>& pixels) {
    const std::size_t per = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (per == 0 || pixels.size() % per != 0) throw std::invalid_argument("write_idx_images: bad pixel count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_be32(out, kIdxImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(pixels.size() / per));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_be32(out, kIdxLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Vec binarize(const Vec& image, Rng& rng) {
    Vec out(image.size());
    for (Eigen::Index i = 0; i < image.size(); ++i) out[i] = rng.uniform() < image[i] ? 1.0 : 0.0;
    return out;
}

Vec center(const Vec& image) { return (2.0 * image.array() - 1.0).matrix(); }

ImageDataset synthetic_bars(int count, int side, Rng& rng, double on, double off) {
    if (count < 1 || side < 1) throw std::invalid_argument("synthetic_bars: count and side must be positive");
    ImageDataset ds;
    ds.rows = side;
    ds.cols = side;
    const double p_bar = 1.0 / side;
    for (int n = 0; n < count; ++n) {
        Vec img = Vec::Constant(side * side, off);
        for (int r = 0; r < side; ++r)
            if (rng.uniform() < p_bar) img.segment(r * side, side).setConstant(on);
        for (int c = 0; c < side; ++c)
            if (rng.uniform() < p_bar)
                for (int r = 0; r < side; ++r) img[r * side + c] = on;
        ds.images.push_back(std::move(img));
    }
    return ds;
}

}  // namespace dcv
