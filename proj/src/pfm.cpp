#include "nlmvs/pfm.hpp"

#include "nlmvs/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nlmvs {

namespace {

constexpr bool host_little_endian() { return std::endian::native == std::endian::little; }

std::string next_token(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw Error(ErrorCategory::Format, "pfm: truncated header");
    return tok;
}

float byteswap_float(float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    u = ((u & 0xFF000000u) >> 24) | ((u & 0x00FF0000u) >> 8) | ((u & 0x0000FF00u) << 8) |
        ((u & 0x000000FFu) << 24);
    std::memcpy(&f, &u, 4);
    return f;
}

} // namespace

HdrImage read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "pfm: cannot open " + path);

    std::string magic = next_token(in);
    int channels;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw Error(ErrorCategory::Format, "pfm: bad magic '" + magic + "' in " + path);

    int width, height;
    double scale;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::logic_error&) {
        throw Error(ErrorCategory::Format, "pfm: malformed header in " + path);
    }
    if (width <= 0 || height <= 0)
        throw Error(ErrorCategory::Format, "pfm: bad dimensions in " + path);
    if (scale == 0)
        throw Error(ErrorCategory::Format, "pfm: zero scale in " + path);
    in.get(); // single whitespace byte after the scale line

    const bool file_little = scale < 0;
    const size_t count = static_cast<size_t>(width) * height * channels;
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
    if (static_cast<size_t>(in.gcount()) != count * 4)
        throw Error(ErrorCategory::Format, "pfm: truncated payload in " + path);

    const bool swap = file_little != host_little_endian();
    HdrImage img(width, height, channels);
    // rows stored bottom-up
    for (int y = 0; y < height; ++y) {
        const float* src = raw.data() + static_cast<size_t>(height - 1 - y) * width * channels;
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                float v = src[x * channels + c];
                if (swap) v = byteswap_float(v);
                if (!std::isfinite(v))
                    throw Error(ErrorCategory::Format, "pfm: non-finite sample in " + path);
                img.at(x, y, c) = v;
            }
    }
    return img;
}

void write_pfm(const HdrImage& image, const std::string& path) {
    if (image.empty()) throw Error(ErrorCategory::Config, "pfm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "pfm: cannot write " + path);

    out << (image.channels() == 3 ? "PF" : "Pf") << "\n"
        << image.width() << " " << image.height() << "\n"
        << "-1.0" << "\n";

    const int w = image.width(), h = image.height(), c = image.channels();
    std::vector<float> row(static_cast<size_t>(w) * c);
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k) {
                float v = image.at(x, y, k);
                if (!host_little_endian()) v = byteswap_float(v);
                row[static_cast<size_t>(x) * c + k] = v;
            }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw Error(ErrorCategory::Io, "pfm: short write to " + path);
}

Mask read_pgm_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "pgm: cannot open " + path);
    std::string magic = next_token(in);
    if (magic != "P5") throw Error(ErrorCategory::Format, "pgm: bad magic in " + path);
    int width, height, maxval;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::logic_error&) {
        throw Error(ErrorCategory::Format, "pgm: malformed header in " + path);
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw Error(ErrorCategory::Format, "pgm: bad header values in " + path);
    in.get();
    std::vector<uint8_t> raw(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        throw Error(ErrorCategory::Format, "pgm: truncated payload in " + path);
    Mask m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            m.set(x, y, raw[static_cast<size_t>(y) * width + x] != 0);
    return m;
}

void write_pgm_mask(const Mask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "pgm: cannot write " + path);
    out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
    std::vector<uint8_t> raw(static_cast<size_t>(mask.width()) * mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            raw[static_cast<size_t>(y) * mask.width() + x] = mask.at(x, y) ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

} // namespace nlmvs
