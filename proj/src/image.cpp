#include "lqp/image.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lqp {

GrayImage to_gray(const Frame& frame, int side) {
    if (side < 1) throw std::invalid_argument("to_gray: side must be >= 1");
    if (side > frame.width || side > frame.height)
        throw std::invalid_argument("to_gray: side " + std::to_string(side) + " exceeds frame " +
                                    std::to_string(frame.width) + "x" + std::to_string(frame.height));

    // Pixel -> block maps derived from the boundary rule start_k = k*dim/side.
    std::vector<int> col_block(frame.width), row_block(frame.height);
    for (int k = 0; k < side; ++k) {
        const int cx0 = k * frame.width / side, cx1 = (k + 1) * frame.width / side;
        for (int x = cx0; x < cx1; ++x) col_block[x] = k;
        const int ry0 = k * frame.height / side, ry1 = (k + 1) * frame.height / side;
        for (int y = ry0; y < ry1; ++y) row_block[y] = k;
    }

    std::vector<std::uint64_t> acc(static_cast<std::size_t>(side) * side, 0);
    const std::uint8_t* p = frame.rgb.data();
    for (int y = 0; y < frame.height; ++y) {
        std::uint64_t* acc_row = acc.data() + static_cast<std::size_t>(row_block[y]) * side;
        for (int x = 0; x < frame.width; ++x, p += 3) {
            acc_row[col_block[x]] += static_cast<std::uint32_t>(p[0]) + p[1] + p[2];
        }
    }

    GrayImage out;
    out.t = frame.t;
    out.side = side;
    out.pixels.resize(static_cast<Eigen::Index>(side) * side);
    for (int r = 0; r < side; ++r) {
        const int ry0 = r * frame.height / side, ry1 = (r + 1) * frame.height / side;
        for (int c = 0; c < side; ++c) {
            const int cx0 = c * frame.width / side, cx1 = (c + 1) * frame.width / side;
            const std::uint64_t area = static_cast<std::uint64_t>(ry1 - ry0) * (cx1 - cx0);
            out.pixels[static_cast<Eigen::Index>(r) * side + c] =
                static_cast<float>(static_cast<double>(acc[static_cast<std::size_t>(r) * side + c]) /
                                   (3.0 * 255.0 * static_cast<double>(area)));
        }
    }
    return out;
}

namespace {
void put_u32le(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}
std::uint32_t get_u32le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_frame_stream_header(std::ostream& out, int width, int height) {
    put_u32le(out, static_cast<std::uint32_t>(width));
    put_u32le(out, static_cast<std::uint32_t>(height));
}

void append_frame(std::ostream& out, const Frame& frame) {
    out.write(reinterpret_cast<const char*>(frame.rgb.data()),
              static_cast<std::streamsize>(frame.rgb.size()));
}

FrameStream read_frame_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    unsigned char header[8];
    in.read(reinterpret_cast<char*>(header), 8);
    if (in.gcount() != 8) throw std::runtime_error("truncated frame stream header in " + path.string());
    FrameStream fs;
    fs.width = static_cast<int>(get_u32le(header));
    fs.height = static_cast<int>(get_u32le(header + 4));
    const std::size_t frame_bytes = static_cast<std::size_t>(fs.width) * fs.height * 3;
    if (frame_bytes == 0) throw std::runtime_error("empty frame dimensions in " + path.string());
    std::vector<std::uint8_t> buf(frame_bytes);
    while (in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes)))
        fs.frames.push_back(buf);
    return fs;
}

}  // namespace lqp
