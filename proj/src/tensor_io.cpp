#include "semdiff/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace semdiff {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("truncated .tns header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(std::endian::native == std::endian::little,
              "tensor container writer assumes a little-endian host");

[[noreturn]] void fail_open(const std::string& path) {
    throw std::runtime_error("cannot open " + path);
}

int read_pnm_header(std::istream& is, const std::string& magic, std::size_t& w,
                    std::size_t& h) {
    std::string m;
    is >> m;
    if (m != magic) throw std::runtime_error("unexpected PNM magic '" + m + "'");
    auto next_token = [&is]() {
        // skip whitespace and '#' comment lines
        int c = is.peek();
        while (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') {
            if (c == '#') {
                std::string line;
                std::getline(is, line);
            } else {
                is.get();
            }
            c = is.peek();
        }
    };
    long wv = 0, hv = 0, maxv = 0;
    next_token(); is >> wv;
    next_token(); is >> hv;
    next_token(); is >> maxv;
    if (!is || wv <= 0 || hv <= 0 || maxv <= 0 || maxv > 255)
        throw std::runtime_error("unsupported PNM header");
    is.get();  // single whitespace before raster
    w = static_cast<std::size_t>(wv);
    h = static_cast<std::size_t>(hv);
    return static_cast<int>(maxv);
}

unsigned char quantize(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

}  // namespace

void save_tns(const Tensor& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail_open(path);
    os.write("TNS1", 4);
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

Tensor load_tns(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail_open(path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TNS1", 4) != 0)
        throw std::runtime_error(path + " is not a TNS1 container");
    const std::uint32_t rank = get_u32(is);
    if (rank == 0 || rank > 8) throw std::runtime_error("implausible .tns rank");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& e : shape) {
        e = get_u32(is);
        n *= e;
    }
    std::vector<double> data(n);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("truncated .tns payload in " + path);
    return Tensor(std::move(shape), std::move(data));
}

FeatureMap read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail_open(path);
    std::size_t w = 0, h = 0;
    const int maxv = read_pnm_header(is, "P5", w, h);
    std::vector<unsigned char> raw(w * h);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("truncated PGM raster in " + path);
    FeatureMap out(1, h, w);
    auto dst = out.values();
    for (std::size_t i = 0; i < raw.size(); ++i)
        dst[i] = static_cast<double>(raw[i]) / static_cast<double>(maxv);
    return out;
}

void write_pgm(const FeatureMap& x, const std::string& path) {
    if (x.channels() != 1)
        throw std::invalid_argument("write_pgm expects a single-channel map");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail_open(path);
    os << "P5\n" << x.width() << " " << x.height() << "\n255\n";
    for (double v : x.values()) os.put(static_cast<char>(quantize(v)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

FeatureMap read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail_open(path);
    std::size_t w = 0, h = 0;
    const int maxv = read_pnm_header(is, "P6", w, h);
    std::vector<unsigned char> raw(w * h * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("truncated PPM raster in " + path);
    FeatureMap out(3, h, w);
    for (std::size_t p = 0; p < w * h; ++p)
        for (std::size_t c = 0; c < 3; ++c)
            out.values()[c * w * h + p] =
                static_cast<double>(raw[3 * p + c]) / static_cast<double>(maxv);
    return out;
}

void write_ppm(const FeatureMap& x, const std::string& path) {
    if (x.channels() != 3)
        throw std::invalid_argument("write_ppm expects a 3-channel map");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail_open(path);
    os << "P6\n" << x.width() << " " << x.height() << "\n255\n";
    const std::size_t plane = x.width() * x.height();
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < 3; ++c)
            os.put(static_cast<char>(quantize(x.values()[c * plane + p])));
    if (!os) throw std::runtime_error("write failed: " + path);
}

LabelMap read_label_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail_open(path);
    std::size_t w = 0, h = 0;
    read_pnm_header(is, "P5", w, h);
    std::vector<unsigned char> raw(w * h);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("truncated PGM raster in " + path);
    LabelMap lm(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) lm.labels[i] = raw[i];
    return lm;
}

void write_label_pgm(const LabelMap& lm, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail_open(path);
    os << "P5\n" << lm.width << " " << lm.height << "\n255\n";
    for (int v : lm.labels) {
        if (v < 0 || v > 255) throw std::invalid_argument("label outside [0,255]");
        os.put(static_cast<char>(v));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

FeatureMap read_image_any(const std::string& path) {
    auto ends_with = [&path](const char* suf) {
        const std::string s(suf);
        return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".tns")) {
        Tensor t = load_tns(path);
        if (t.rank() == 2)
            return FeatureMap(Tensor({1, t.shape()[0], t.shape()[1]},
                                     {t.values().begin(), t.values().end()}));
        return FeatureMap(std::move(t));
    }
    if (ends_with(".pgm")) return read_pgm(path);
    if (ends_with(".ppm")) return read_ppm(path);
    throw std::runtime_error("unknown image extension: " + path);
}

}  // namespace semdiff
