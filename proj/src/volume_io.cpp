#include "lsdeconv/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace lsdeconv {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw payload I/O assumes a little-endian host");

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

void save_volume(const Volume& v, const std::string& path) {
    json hdr = {
        {"dims", {v.nx, v.ny, v.nz}},
        {"pitch_um", {v.pitch[0], v.pitch[1], v.pitch[2]}},
        {"dtype", "f32"},
        {"order", "little"},
        {"origin", v.origin == Origin::Centered ? "centered" : "corner"},
    };
    std::ofstream jh(path + ".json");
    if (!jh) throw std::runtime_error("cannot write " + path + ".json");
    jh << hdr.dump(2) << "\n";

    std::ofstream raw(path + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write " + path + ".raw");
    std::vector<float> buf(v.data.size());
    for (size_t i = 0; i < v.data.size(); ++i) buf[i] = static_cast<float>(v.data[i]);
    raw.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!raw) throw std::runtime_error("short write to " + path + ".raw");
}

Volume load_volume(const std::string& path) {
    json hdr;
    try {
        hdr = json::parse(read_file(path + ".json"));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed header " + path + ".json: " + e.what());
    }
    if (!hdr.contains("dims") || !hdr.contains("dtype") || !hdr.contains("order"))
        throw std::runtime_error("malformed header " + path + ".json: missing keys");
    auto dims = hdr["dims"];
    if (!dims.is_array() || dims.size() != 3)
        throw std::runtime_error("malformed header: dims must be 3 integers");
    long long nx = dims[0].get<long long>(), ny = dims[1].get<long long>(),
              nz = dims[2].get<long long>();
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::runtime_error("invalid header: dims must be positive");
    if (nx * ny * nz > (1LL << 33))
        throw std::runtime_error("invalid header: dims overflow");
    if (hdr["dtype"] != "f32") throw std::runtime_error("unsupported dtype");
    if (hdr["order"] != "little") throw std::runtime_error("unsupported byte order");

    Volume v(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz));
    if (hdr.contains("pitch_um")) {
        auto p = hdr["pitch_um"];
        v.pitch = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
        for (double x : v.pitch)
            if (!(x > 0)) throw std::runtime_error("invalid header: pitch must be positive");
    }
    if (hdr.value("origin", "centered") == std::string("corner")) v.origin = Origin::Corner;

    std::string raw = read_file(path + ".raw");
    if (raw.size() != v.size() * sizeof(float))
        throw std::runtime_error("truncated payload " + path + ".raw");
    const float* src = reinterpret_cast<const float*>(raw.data());
    for (size_t i = 0; i < v.size(); ++i) v.data[i] = src[i];
    return v;
}

namespace {

class TiffReader {
public:
    explicit TiffReader(std::string bytes) : b_(std::move(bytes)) {
        if (b_.size() < 8) throw std::runtime_error("TIFF: file too short");
        if (b_[0] == 'I' && b_[1] == 'I') little_ = true;
        else if (b_[0] == 'M' && b_[1] == 'M') little_ = false;
        else throw std::runtime_error("TIFF: bad byte-order mark");
        if (u16(2) != 42) throw std::runtime_error("TIFF: bad magic");
    }

    uint16_t u16(size_t off) const {
        check(off, 2);
        auto a = static_cast<uint8_t>(b_[off]), b = static_cast<uint8_t>(b_[off + 1]);
        return little_ ? static_cast<uint16_t>(a | (b << 8))
                       : static_cast<uint16_t>((a << 8) | b);
    }
    uint32_t u32(size_t off) const {
        check(off, 4);
        uint32_t r = 0;
        for (int i = 0; i < 4; ++i) {
            auto byte = static_cast<uint8_t>(b_[off + (little_ ? 3 - i : i)]);
            r = (r << 8) | byte;
        }
        return r;
    }
    size_t size() const { return b_.size(); }

private:
    void check(size_t off, size_t n) const {
        if (off + n > b_.size()) throw std::runtime_error("TIFF: truncated file");
    }
    std::string b_;
    bool little_ = true;
};

struct TiffPage {
    uint32_t width = 0, height = 0;
    uint16_t bits = 1, samples = 1, compression = 1;
    std::vector<uint32_t> strip_offsets, strip_counts;
    uint32_t rows_per_strip = 0xFFFFFFFF;
};

// Field value helper: reads count inline/offset u16 or u32 entries.
std::vector<uint32_t> read_values(const TiffReader& t, size_t entry) {
    uint16_t type = t.u16(entry + 2);
    uint32_t count = t.u32(entry + 4);
    size_t elem = (type == 3) ? 2 : 4;  // SHORT or LONG
    if (type != 3 && type != 4) throw std::runtime_error("TIFF: unsupported field type");
    size_t src = (elem * count <= 4) ? entry + 8 : t.u32(entry + 8);
    std::vector<uint32_t> out(count);
    for (uint32_t i = 0; i < count; ++i)
        out[i] = (type == 3) ? t.u16(src + 2 * i) : t.u32(src + 4 * i);
    return out;
}

}  // namespace

Volume load_tiff_u16(const std::string& path) {
    TiffReader t(read_file(path));
    std::vector<TiffPage> pages;
    uint32_t ifd = t.u32(4);
    while (ifd != 0) {
        uint16_t n = t.u16(ifd);
        TiffPage pg;
        for (uint16_t e = 0; e < n; ++e) {
            size_t entry = ifd + 2 + 12 * static_cast<size_t>(e);
            uint16_t tag = t.u16(entry);
            switch (tag) {
                case 256: pg.width = read_values(t, entry)[0]; break;
                case 257: pg.height = read_values(t, entry)[0]; break;
                case 258: pg.bits = static_cast<uint16_t>(read_values(t, entry)[0]); break;
                case 259: pg.compression = static_cast<uint16_t>(read_values(t, entry)[0]); break;
                case 273: pg.strip_offsets = read_values(t, entry); break;
                case 277: pg.samples = static_cast<uint16_t>(read_values(t, entry)[0]); break;
                case 278: pg.rows_per_strip = read_values(t, entry)[0]; break;
                case 279: pg.strip_counts = read_values(t, entry); break;
                default: break;
            }
        }
        if (pg.compression != 1) throw std::runtime_error("TIFF: compressed data not supported");
        if (pg.bits != 16 || pg.samples != 1)
            throw std::runtime_error("TIFF: expected single-channel 16-bit data");
        if (pg.width == 0 || pg.height == 0) throw std::runtime_error("TIFF: missing dims");
        pages.push_back(pg);
        ifd = t.u32(ifd + 2 + 12 * static_cast<size_t>(n));
    }
    if (pages.empty()) throw std::runtime_error("TIFF: no pages");
    for (const auto& pg : pages)
        if (pg.width != pages[0].width || pg.height != pages[0].height)
            throw std::runtime_error("TIFF: pages differ in size");

    Volume v(static_cast<int>(pages[0].width), static_cast<int>(pages[0].height),
             static_cast<int>(pages.size()));
    for (size_t k = 0; k < pages.size(); ++k) {
        const auto& pg = pages[k];
        size_t pixel = 0, npix = static_cast<size_t>(pg.width) * pg.height;
        for (size_t s = 0; s < pg.strip_offsets.size(); ++s) {
            size_t off = pg.strip_offsets[s];
            size_t count = pg.strip_counts.at(s) / 2;
            for (size_t i = 0; i < count && pixel < npix; ++i, ++pixel) {
                int x = static_cast<int>(pixel % pg.width);
                int y = static_cast<int>(pixel / pg.width);
                v.at(x, y, static_cast<int>(k)) = t.u16(off + 2 * i);
            }
        }
        if (pixel != npix) throw std::runtime_error("TIFF: truncated payload");
    }
    return v;
}

void save_pgm(const Image2D& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    auto bytes = to_u8(img);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace lsdeconv
