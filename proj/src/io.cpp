#include "hsdiff/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace hsdiff {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint8_t>(buf[off]) |
           (static_cast<std::uint8_t>(buf[off + 1]) << 8) |
           (static_cast<std::uint8_t>(buf[off + 2]) << 16) |
           (static_cast<std::uint8_t>(buf[off + 3]) << 24);
}

float get_f32(const std::string& buf, std::size_t off) {
    std::uint32_t bits = get_u32(buf, off);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// atomic write: temp file in the same directory, then rename
void spill(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("rename " + tmp + " -> " + path + " failed");
}

struct ContainerHeader {
    std::uint32_t rows, cols, bands, flags;
    std::vector<double> wavelengths;
    std::size_t payload_off;
};

ContainerHeader read_header(const std::string& buf, const std::string& path) {
    if (buf.size() < 4 || std::memcmp(buf.data(), "HSC1", 4) != 0)
        throw FormatError(path + ": bad magic at byte offset 0");
    if (buf.size() < 20)
        throw FormatError(path + ": truncated header at byte offset " + std::to_string(buf.size()));
    ContainerHeader h;
    h.rows = get_u32(buf, 4);
    h.cols = get_u32(buf, 8);
    h.bands = get_u32(buf, 12);
    h.flags = get_u32(buf, 16);
    const std::size_t wl_end = 20 + 4ull * h.bands;
    if (buf.size() < wl_end)
        throw FormatError(path + ": truncated wavelength table at byte offset " +
                          std::to_string(buf.size()));
    h.wavelengths.resize(h.bands);
    for (std::uint32_t b = 0; b < h.bands; ++b) {
        h.wavelengths[b] = get_f32(buf, 20 + 4ull * b);
        if (b > 0 && !(h.wavelengths[b] > h.wavelengths[b - 1]))
            throw FormatError(path + ": non-increasing wavelengths at byte offset " +
                              std::to_string(20 + 4ull * b));
    }
    h.payload_off = wl_end;
    const std::size_t need = wl_end + 4ull * h.rows * h.cols * h.bands;
    if (buf.size() != need)
        throw FormatError(path + ": payload truncated at byte offset " +
                          std::to_string(buf.size()) + " (expected " + std::to_string(need) + ")");
    return h;
}

std::string to_container(int rows, int cols, int bands, std::uint32_t flags,
                         const std::vector<double>& wavelengths, const double* data,
                         std::size_t count) {
    std::string buf;
    buf.reserve(20 + 4ull * bands + 4ull * count);
    buf.append("HSC1");
    put_u32(buf, static_cast<std::uint32_t>(rows));
    put_u32(buf, static_cast<std::uint32_t>(cols));
    put_u32(buf, static_cast<std::uint32_t>(bands));
    put_u32(buf, flags);
    for (double w : wavelengths) put_f32(buf, static_cast<float>(w));
    for (std::size_t i = 0; i < count; ++i) put_f32(buf, static_cast<float>(data[i]));
    return buf;
}

} // namespace

HSICube read_cube(const std::string& path) {
    const std::string buf = slurp(path);
    const ContainerHeader h = read_header(buf, path);
    WavelengthGrid grid;
    grid.nm = h.wavelengths;
    grid.validate();
    HSICube cube(static_cast<int>(h.rows), static_cast<int>(h.cols), grid,
                 (h.flags & 1u) ? Domain::Model : Domain::Reflectance);
    for (std::size_t i = 0; i < cube.data.size(); ++i)
        cube.data[i] = get_f32(buf, h.payload_off + 4 * i);
    return cube;
}

void write_cube(const HSICube& cube, const std::string& path) {
    const std::uint32_t flags = cube.domain == Domain::Model ? 1u : 0u;
    spill(path, to_container(cube.rows, cube.cols, cube.bands(), flags, cube.grid.nm,
                             cube.data.data(), cube.data.size()));
}

Image read_image(const std::string& path) {
    const std::string buf = slurp(path);
    const ContainerHeader h = read_header(buf, path);
    Image img(static_cast<int>(h.rows), static_cast<int>(h.cols), static_cast<int>(h.bands));
    // container payload is band-major; images are pixel-major
    const std::size_t npix = static_cast<std::size_t>(img.rows) * img.cols;
    for (std::uint32_t b = 0; b < h.bands; ++b)
        for (std::size_t p = 0; p < npix; ++p)
            img.data[p * h.bands + b] = get_f32(buf, h.payload_off + 4 * (b * npix + p));
    return img;
}

void write_image(const Image& img, const std::string& path) {
    std::vector<double> wl(img.channels);
    for (int c = 0; c < img.channels; ++c) wl[c] = c;
    const std::size_t npix = static_cast<std::size_t>(img.rows) * img.cols;
    std::vector<double> planar(img.data.size());
    for (int b = 0; b < img.channels; ++b)
        for (std::size_t p = 0; p < npix; ++p)
            planar[static_cast<std::size_t>(b) * npix + p] = img.data[p * img.channels + b];
    spill(path, to_container(img.rows, img.cols, img.channels, 0, wl, planar.data(),
                             planar.size()));
}

PSFStack read_psf(const std::string& path) {
    HSICube cube = read_cube(path);
    if (cube.rows != cube.cols)
        throw FormatError(path + ": PSF kernels must be square");
    PSFStack psf;
    psf.size = cube.rows;
    psf.grid = cube.grid;
    psf.k.resize(cube.data.size());
    // cube is band-major already; reuse layout directly
    psf.k = cube.data;
    psf.validate();
    return psf;
}

void write_psf(const PSFStack& psf, const std::string& path) {
    spill(path, to_container(psf.size, psf.size, psf.bands(), 0, psf.grid.nm, psf.k.data(),
                             psf.k.size()));
}

SpectralResponse read_srf(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    SpectralResponse srf;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
        if (blank) continue;
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        double wl, r, g, b;
        if (!(ss >> wl >> r >> g >> b))
            throw FormatError(path + ": malformed SRF row at line " + std::to_string(lineno));
        srf.grid.nm.push_back(wl);
        srf.q.push_back(r);
        srf.q.push_back(g);
        srf.q.push_back(b);
    }
    srf.grid.validate();
    srf.validate();
    return srf;
}

void write_srf(const SpectralResponse& srf, const std::string& path) {
    std::ostringstream out;
    out << "# wavelength_nm,R,G,B\n";
    out.precision(17);
    for (int b = 0; b < srf.bands(); ++b)
        out << srf.grid.nm[b] << "," << srf.at(b, 0) << "," << srf.at(b, 1) << ","
            << srf.at(b, 2) << "\n";
    spill(path, out.str());
}

LabelMap read_labels(const std::string& path) {
    const std::string buf = slurp(path);
    std::istringstream ss(buf);
    std::string magic;
    long w = 0, h = 0, maxval = 0;
    ss >> magic;
    if (magic != "P5")
        throw FormatError(path + ": expected binary PGM magic P5");
    auto next_token = [&](long& out) {
        std::string tok;
        while (ss >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(ss, rest);
                continue;
            }
            out = std::stol(tok);
            return;
        }
        throw FormatError(path + ": truncated PGM header");
    };
    next_token(w);
    next_token(h);
    next_token(maxval);
    if (maxval != 65535)
        throw FormatError(path + ": label maps must be 16-bit (maxval 65535)");
    ss.get();  // single whitespace after maxval
    const std::size_t data_off = static_cast<std::size_t>(ss.tellg());
    const std::size_t need = data_off + 2ull * w * h;
    if (buf.size() < need)
        throw FormatError(path + ": truncated PGM payload at byte offset " +
                          std::to_string(buf.size()));
    LabelMap labels(static_cast<int>(h), static_cast<int>(w));
    for (long i = 0; i < w * h; ++i) {
        // PGM stores 16-bit samples most significant byte first
        const std::uint16_t v =
            (static_cast<std::uint8_t>(buf[data_off + 2 * i]) << 8) |
            static_cast<std::uint8_t>(buf[data_off + 2 * i + 1]);
        labels.cls[i] = v;
    }
    labels.num_classes();  // validates class 0 absence and contiguity
    return labels;
}

void write_labels(const LabelMap& labels, const std::string& path) {
    std::string out = "P5\n" + std::to_string(labels.cols) + " " + std::to_string(labels.rows) +
                      "\n65535\n";
    out.reserve(out.size() + 2ull * labels.cls.size());
    for (std::uint16_t v : labels.cls) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xFF));
    }
    spill(path, out);
}

CodedMask read_mask(const std::string& path) {
    HSICube cube = read_cube(path);
    if (cube.bands() != 2)
        throw FormatError(path + ": mask container must have exactly 2 bands");
    CodedMask mask;
    mask.rows = cube.rows;
    mask.cols = cube.cols;
    mask.m.resize(static_cast<std::size_t>(mask.rows) * mask.cols);
    const std::size_t npix = mask.m.size();
    for (std::size_t p = 0; p < npix; ++p) {
        const double v = cube.data[p];
        if (v != 0.0 && v != 1.0)
            throw FormatError(path + ": mask entries must be binary");
        mask.m[p] = static_cast<std::uint8_t>(v);
    }
    return mask;
}

void write_mask(const CodedMask& mask, const std::string& path) {
    // stored as a 2-band container (wavelength slots 0 and 1); band 0 holds
    // the binary mask, band 1 is zero padding so the grid stays valid
    HSICube cube(mask.rows, mask.cols, WavelengthGrid{{0.0, 1.0}}, Domain::Reflectance);
    const std::size_t npix = static_cast<std::size_t>(mask.rows) * mask.cols;
    for (std::size_t p = 0; p < npix; ++p) cube.data[p] = mask.m[p];
    write_cube(cube, path);
}

std::vector<double> read_illuminant(const std::string& path, const WavelengthGrid& grid) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<double> wl, val;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        double w, v;
        if (ss >> w >> v) {
            wl.push_back(w);
            val.push_back(v);
        }
    }
    if (wl.size() != static_cast<std::size_t>(grid.bands()))
        throw FormatError(path + ": illuminant row count != K");
    for (int b = 0; b < grid.bands(); ++b)
        if (std::abs(wl[b] - grid.nm[b]) > 1e-6)
            throw FormatError(path + ": illuminant wavelengths do not match the grid");
    return val;
}

GaussianAnalyticPrior read_prior(const std::string& prefix) {
    GaussianAnalyticPrior prior;
    prior.mean = read_cube(prefix + ".mean.hsc");
    prior.var = read_cube(prefix + ".var.hsc");
    prior.validate();
    return prior;
}

void write_prior(const GaussianAnalyticPrior& prior, const std::string& prefix) {
    write_cube(prior.mean, prefix + ".mean.hsc");
    write_cube(prior.var, prefix + ".var.hsc");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "operator.kind",    "operator.srf",     "operator.psf",     "operator.mask",
    "operator.shear",   "operator.sigma_n", "operator.noise_seed",
    "sampler.steps",    "sampler.sigma_min", "sampler.sigma_max", "sampler.rho",
    "sampler.s_churn",  "sampler.s_min",    "sampler.s_max",    "sampler.s_noise",
    "sampler.members",  "sampler.seed",
    "guidance.sigma_y", "guidance.nu",      "guidance.lambda",
    "metamer.m",        "metamer.seed",     "metamer.illuminant",
    "io.measurement",   "io.prior",         "io.ref",           "io.out_dir",
    "io.workers",
};

} // namespace

PipelineConfig PipelineConfig::parse_string(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            const auto a = s.find_first_not_of(ws);
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(ws);
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        const std::string full = section + "." + key;
        if (kKnownKeys.find(full) == kKnownKeys.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + full +
                              "'");
        cfg.values_[full] = value;
    }
    return cfg;
}

PipelineConfig PipelineConfig::parse_file(const std::string& path) {
    return parse_string(slurp(path));
}

bool PipelineConfig::has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
}

std::string PipelineConfig::get_str(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
    auto it = values_.find(section + "." + key);
    return it == values_.end() ? fallback : it->second;
}

double PipelineConfig::get_num(const std::string& section, const std::string& key,
                               double fallback) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + section + "." + key + ": not a number ('" +
                          it->second + "')");
    }
}

long PipelineConfig::get_int(const std::string& section, const std::string& key,
                             long fallback) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + section + "." + key + ": not an integer ('" +
                          it->second + "')");
    }
}

} // namespace hsdiff
