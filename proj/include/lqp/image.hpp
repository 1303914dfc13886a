#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace lqp {

// One camera frame: row-major RGB, 8 bits per channel.
struct Frame {
    double t = 0.0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // size = width * height * 3

    std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* pixel(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

// Reduced grayscale image, side x side, intensities in [0,1], row-major flat.
struct GrayImage {
    double t = 0.0;
    int side = 0;
    Eigen::VectorXf pixels;

    float at(int row, int col) const { return pixels[static_cast<Eigen::Index>(row) * side + col]; }
};

// Channel-mean grayscale followed by area-average downsampling onto a
// side x side grid. Block boundaries are floor(k * dim / side), so block
// sizes differ by at most one pixel.
GrayImage to_gray(const Frame& frame, int side);

// Raw frame dump: 8-byte header (width, height as little-endian uint32),
// then the concatenated RGB payload of each appended frame.
void write_frame_stream_header(std::ostream& out, int width, int height);
void append_frame(std::ostream& out, const Frame& frame);

struct FrameStream {
    int width = 0;
    int height = 0;
    std::vector<std::vector<std::uint8_t>> frames;
};
FrameStream read_frame_stream(const std::filesystem::path& path);

}  // namespace lqp
