#include "weylworlds/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "weylworlds/error.hpp"

namespace weylworlds {

namespace {

constexpr char kMagic[4] = {'W', 'W', 'F', '1'};
constexpr std::uint32_t kByteOrder = 0x01020304u;

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T byteswap(T v) {
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

struct Reader {
    std::istream& in;
    bool swap = false;

    template <class T>
    T get() {
        T v{};
        in.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in) throw IoError("truncated WWF1 file");
        return swap ? byteswap(v) : v;
    }
};

}  // namespace

void write_wavefunction(std::ostream& out, const WaveFunction& psi) {
    const Grid& grid = psi.grid();
    const std::size_t n = grid.dim();
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kByteOrder);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
    for (std::size_t a = 0; a < n; ++a) put<std::uint64_t>(out, grid.axis(a).count);
    for (std::size_t a = 0; a < n; ++a) put<double>(out, grid.axis(a).min);
    for (std::size_t a = 0; a < n; ++a) put<double>(out, grid.spacing(a));
    for (std::size_t a = 0; a < n; ++a) put<std::uint8_t>(out, grid.axis(a).periodic ? 1 : 0);
    for (std::size_t pad = n; pad % 8 != 0; ++pad) put<std::uint8_t>(out, 0);
    put<double>(out, psi.t());
    put<double>(out, psi.hbar());
    for (std::size_t a = 0; a < n; ++a) put<double>(out, psi.metric().lower(a));
    for (const Complex& z : psi.values()) {
        put<double>(out, z.real());
        put<double>(out, z.imag());
    }
    if (!out) throw IoError("failed writing WWF1 data");
}

void write_wavefunction(const std::filesystem::path& path, const WaveFunction& psi) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_wavefunction(out, psi);
}

WaveFunction read_wavefunction(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a WWF1 file");
    Reader r{in};
    const std::uint32_t tag = r.get<std::uint32_t>();
    if (tag == byteswap(kByteOrder))
        r.swap = true;
    else if (tag != kByteOrder)
        throw IoError("WWF1 byte-order tag is corrupt");
    const std::uint32_t n = r.get<std::uint32_t>();
    if (n == 0 || n > 16) throw IoError("WWF1 dimension out of range");
    std::vector<Axis> axes(n);
    std::vector<double> spacing(n);
    for (auto& ax : axes) ax.count = r.get<std::uint64_t>();
    for (auto& ax : axes) ax.min = r.get<double>();
    for (auto& h : spacing) h = r.get<double>();
    for (auto& ax : axes) ax.periodic = r.get<std::uint8_t>() != 0;
    for (std::size_t pad = n; pad % 8 != 0; ++pad) r.get<std::uint8_t>();
    std::size_t total = 1;
    for (std::size_t a = 0; a < n; ++a) {
        Axis& ax = axes[a];
        if (ax.count < 2 || !(spacing[a] > 0.0)) throw IoError("WWF1 axis is degenerate");
        if (ax.count > std::numeric_limits<std::size_t>::max() / total)
            throw IoError("WWF1 grid too large");
        total *= ax.count;
        const double cells = static_cast<double>(ax.periodic ? ax.count : ax.count - 1);
        ax.max = ax.min + spacing[a] * cells;
    }
    const double t = r.get<double>();
    const double hbar = r.get<double>();
    std::vector<double> diag(n);
    for (auto& d : diag) d = r.get<double>();
    std::vector<Complex> values(total);
    for (auto& z : values) {
        const double re = r.get<double>();
        const double im = r.get<double>();
        z = {re, im};
    }
    return WaveFunction(Grid(std::move(axes)), Metric(std::move(diag)), std::move(values), t, hbar);
}

WaveFunction read_wavefunction(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_wavefunction(in);
}

std::string format_double(double v) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_ensemble_csv(std::ostream& out, const WorldEnsemble& e, bool header) {
    const std::size_t n = e.dim();
    if (header) {
        out << "t,world_index";
        for (const char* prefix : {"x", "q", "v"})
            for (std::size_t a = 0; a < n; ++a) out << ',' << prefix << a;
        out << '\n';
    }
    const std::string t = format_double(e.t());
    for (std::size_t k = 0; k < e.size(); ++k) {
        out << t << ',' << k;
        for (double v : e.label(k)) out << ',' << format_double(v);
        for (double v : e.position(k)) out << ',' << format_double(v);
        for (double v : e.velocity(k)) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_ensemble_csv(const std::filesystem::path& path, const WorldEnsemble& e) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_ensemble_csv(out, e, true);
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

double parse_field(std::string_view s, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError("bad number '" + std::string(s) + "' in " + where);
    return v;
}

}  // namespace

WorldEnsemble read_ensemble_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    std::size_t cols = 1;
    for (char c : line) cols += c == ',';
    if (line.rfind("t,world_index", 0) != 0 || cols < 5 || (cols - 2) % 3 != 0)
        throw IoError(path.string() + " does not have an ensemble header");
    const std::size_t n = (cols - 2) / 3;

    std::vector<double> lab, pos, vel;
    double current = std::numeric_limits<double>::quiet_NaN();
    std::size_t row = 1;
    std::vector<double> fields(cols);
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(row);
        std::size_t start = 0, c = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (c >= cols) throw IoError("too many columns at " + where);
                fields[c++] = parse_field(std::string_view(line).substr(start, i - start), where);
                start = i + 1;
            }
        }
        if (c != cols) throw IoError("too few columns at " + where);
        if (fields[0] != current) {
            current = fields[0];
            lab.clear();
            pos.clear();
            vel.clear();
        }
        lab.insert(lab.end(), fields.begin() + 2, fields.begin() + 2 + n);
        pos.insert(pos.end(), fields.begin() + 2 + n, fields.begin() + 2 + 2 * n);
        vel.insert(vel.end(), fields.begin() + 2 + 2 * n, fields.end());
    }
    if (pos.empty()) throw IoError(path.string() + " has no rows");
    return WorldEnsemble::restore(n, std::move(lab), std::move(pos), std::move(vel), current);
}

}  // namespace weylworlds
