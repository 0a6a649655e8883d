#include "odisphere/io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "odisphere/error.hpp"

namespace odisphere {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

// ---- PFM ------------------------------------------------------------------

std::vector<std::uint8_t> encode_pfm(const Raster& img)
{
    if (img.channels() != 1 && img.channels() != 3) throw std::invalid_argument("PFM holds 1 or 3 channels");
    std::ostringstream header;
    header << (img.channels() == 1 ? "Pf" : "PF") << '\n' << img.cols() << ' ' << img.rows() << "\n-1.0\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(h.size() + img.size() * sizeof(float));
    for (std::size_t r = img.rows(); r-- > 0;) {
        for (std::size_t c = 0; c < img.cols(); ++c) {
            for (std::size_t ch = 0; ch < img.channels(); ++ch) {
                const auto f = static_cast<float>(img(r, c, ch));
                std::uint8_t b[sizeof(float)];
                std::memcpy(b, &f, sizeof f);
                out.insert(out.end(), b, b + sizeof b);
            }
        }
    }
    return out;
}

Raster decode_pfm(const std::vector<std::uint8_t>& bytes)
{
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        if (start == pos) throw IoError("PFM: truncated header");
        return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                           bytes.begin() + static_cast<std::ptrdiff_t>(pos));
    };
    const std::string magic = token();
    std::size_t channels = 0;
    if (magic == "Pf") channels = 1;
    else if (magic == "PF") channels = 3;
    else throw IoError("PFM: bad magic '" + magic + "'");
    std::size_t width = 0;
    std::size_t height = 0;
    double scale = 0.0;
    try {
        width = std::stoul(token());
        height = std::stoul(token());
        scale = std::stod(token());
    } catch (const std::logic_error&) {
        throw IoError("PFM: malformed header");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError("PFM: malformed header");
    ++pos;
    if (width == 0 || height == 0 || scale == 0.0) throw IoError("PFM: invalid dimensions or scale");
    const bool big_endian = scale > 0.0;
    const std::size_t count = width * height * channels;
    if (bytes.size() - pos != count * sizeof(float)) throw IoError("PFM: payload size does not match header");

    Raster img(height, width, channels);
    const std::uint8_t* p = bytes.data() + pos;
    for (std::size_t r = height; r-- > 0;) {
        for (std::size_t c = 0; c < width; ++c) {
            for (std::size_t ch = 0; ch < channels; ++ch) {
                std::uint8_t b[sizeof(float)];
                std::memcpy(b, p, sizeof b);
                if (big_endian) std::reverse(b, b + sizeof b);
                float f;
                std::memcpy(&f, b, sizeof f);
                img(r, c, ch) = f;
                p += sizeof b;
            }
        }
    }
    return img;
}

void write_pfm(const std::filesystem::path& path, const Raster& img) { write_bytes(path, encode_pfm(img)); }

Raster read_pfm(const std::filesystem::path& path)
{
    try {
        return decode_pfm(read_bytes(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// ---- PNG ------------------------------------------------------------------

Raster read_png(const std::filesystem::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const std::size_t channels = color ? 3 : 1;
    Raster img(image.height, image.width, channels);
    for (std::size_t r = 0; r < image.height; ++r)
        for (std::size_t c = 0; c < image.width; ++c)
            for (std::size_t ch = 0; ch < channels; ++ch)
                img(r, c, ch) = buffer[(r * image.width + c) * channels + ch] / 255.0;
    return img;
}

void write_png_preview(const std::filesystem::path& path, const Raster& map)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(map.cols());
    image.height = static_cast<png_uint_32>(map.rows());
    image.format = PNG_FORMAT_GRAY;
    const auto plane = map.plane(0);
    const double peak = plane.empty() ? 0.0 : *std::max_element(plane.begin(), plane.end());
    std::vector<png_byte> buffer(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i)
        buffer[i] = peak > 0.0 ? static_cast<png_byte>(std::lround(255.0 * std::clamp(plane[i] / peak, 0.0, 1.0))) : 0;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

Raster read_image(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".png") return read_png(path);
    throw IoError("unsupported image format: " + path.string());
}

// ---- OSB1 -----------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'O', 'S', 'B', '1'};

class Writer {
public:
    Writer() { bytes_.insert(bytes_.end(), kMagic, kMagic + 4); }

    void u32(std::uint32_t v) { put(&v, sizeof v); }
    void f64(double v) { put(&v, sizeof v); }
    void f64s(std::span<const double> vs)
    {
        for (double v : vs) f64(v);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    void put(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes)
    {
        if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("OSB1: bad magic");
        pos_ = 4;
    }

    std::uint32_t u32()
    {
        std::uint32_t v;
        get(&v, sizeof v);
        return v;
    }
    double f64()
    {
        double v;
        get(&v, sizeof v);
        return v;
    }
    void f64s(std::span<double> out)
    {
        for (double& v : out) v = f64();
    }
    void expect_end() const
    {
        if (pos_ != bytes_.size()) throw IoError("OSB1: trailing bytes after payload");
    }

private:
    void get(void* p, std::size_t n)
    {
        if (bytes_.size() - pos_ < n) throw IoError("OSB1: truncated file");
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v)
{
    if (v > UINT32_MAX) throw std::invalid_argument("OSB1: dimension exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_osb1(const BiasGrid& bias)
{
    Writer w;
    w.u32(static_cast<std::uint32_t>(Osb1Kind::bias_grid));
    w.u32(checked_u32(bias.channels()));
    w.u32(checked_u32(bias.grid_rows()));
    w.u32(checked_u32(bias.grid_cols()));
    w.f64s(bias.elevations());
    w.f64s(bias.weights());
    return w.take();
}

std::vector<std::uint8_t> encode_osb1(const AttentionParams& params)
{
    Writer w;
    w.u32(static_cast<std::uint32_t>(Osb1Kind::attention));
    w.u32(static_cast<std::uint32_t>(params.arch));
    w.u32(checked_u32(params.layers.size()));
    for (const ConvLayer& l : params.layers) {
        w.u32(checked_u32(l.in_channels));
        w.u32(checked_u32(l.out_channels));
        w.u32(checked_u32(l.kernel_rows));
        w.u32(checked_u32(l.kernel_cols));
    }
    for (const ConvLayer& l : params.layers) {
        w.f64s(l.weights);
        w.f64s(l.bias);
    }
    return w.take();
}

Osb1Kind peek_osb1_kind(const std::vector<std::uint8_t>& bytes)
{
    Reader r(bytes);
    const std::uint32_t kind = r.u32();
    if (kind != 1 && kind != 2) throw IoError("OSB1: unknown kind " + std::to_string(kind));
    return static_cast<Osb1Kind>(kind);
}

BiasGrid decode_osb1_bias(const std::vector<std::uint8_t>& bytes)
{
    Reader r(bytes);
    if (r.u32() != static_cast<std::uint32_t>(Osb1Kind::bias_grid)) throw IoError("OSB1: not a bias grid");
    const std::uint32_t channels = r.u32();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (channels == 0 || rows == 0 || cols == 0) throw IoError("OSB1: empty bias grid");
    const std::size_t expected = 4 + 4 * 4 + 8ull * channels + 8ull * channels * rows * cols;
    if (bytes.size() != expected) throw IoError("OSB1: bias payload size does not match header");
    std::vector<double> elevations(channels);
    r.f64s(elevations);
    BiasGrid grid(rows, cols, std::move(elevations));
    r.f64s(grid.weights());
    r.expect_end();
    return grid;
}

AttentionParams decode_osb1_attention(const std::vector<std::uint8_t>& bytes)
{
    Reader r(bytes);
    if (r.u32() != static_cast<std::uint32_t>(Osb1Kind::attention)) throw IoError("OSB1: not attention parameters");
    const std::uint32_t arch = r.u32();
    if (arch < 1 || arch > 4) throw IoError("OSB1: invalid architecture " + std::to_string(arch));
    const std::uint32_t n_layers = r.u32();
    if (n_layers == 0 || n_layers > 64) throw IoError("OSB1: invalid layer count");
    AttentionParams p;
    p.arch = static_cast<Architecture>(arch);
    std::size_t payload = 0;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t in = r.u32();
        const std::uint32_t out = r.u32();
        const std::uint32_t kr = r.u32();
        const std::uint32_t kc = r.u32();
        if (in == 0 || out == 0 || kr == 0 || kc == 0) throw IoError("OSB1: empty layer");
        payload += (std::size_t{out} * in * kr * kc + out) * sizeof(double);
        if (payload > bytes.size()) throw IoError("OSB1: attention payload size does not match header");
        p.layers.emplace_back(in, out, kr, kc);
    }
    for (std::size_t i = 1; i < p.layers.size(); ++i)
        if (p.layers[i].in_channels != p.layers[i - 1].out_channels) throw IoError("OSB1: layer shapes do not chain");
    const AttentionParams expected = AttentionParams::make(p.arch, p.layers.front().in_channels,
                                                           p.layers.front().out_channels, p.layers.back().out_channels, 0);
    bool shapes_match = expected.layers.size() == p.layers.size();
    for (std::size_t i = 0; shapes_match && i < p.layers.size(); ++i) {
        const ConvLayer& a = expected.layers[i];
        const ConvLayer& b = p.layers[i];
        shapes_match = a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
                       a.kernel_rows == b.kernel_rows && a.kernel_cols == b.kernel_cols;
    }
    if (!shapes_match) throw IoError("OSB1: layer stack does not match architecture " + std::to_string(arch));
    for (ConvLayer& l : p.layers) {
        r.f64s(l.weights);
        r.f64s(l.bias);
    }
    r.expect_end();
    return p;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

}  // namespace odisphere
