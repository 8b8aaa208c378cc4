#include "bdsde/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "dump formats assume a little-endian host");

namespace bdsde {

namespace {

constexpr char kPathMagic[8] = {'B', 'D', 'S', 'D', 'E', 'P', 'T', 'H'};
constexpr char kFieldMagic[8] = {'B', 'D', 'S', 'D', 'E', 'F', 'L', 'D'};
constexpr std::uint64_t kVersion = 1;

struct File {
    std::FILE* f = nullptr;
    explicit File(const std::string& path, const char* mode) : f(std::fopen(path.c_str(), mode)) {
        if (!f) throw std::invalid_argument("io: cannot open '" + path + "'");
    }
    ~File() {
        if (f) std::fclose(f);
    }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
};

void put(std::FILE* f, const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f) != n) throw std::runtime_error("io: short write");
}

void get(std::FILE* f, void* p, std::size_t n) {
    if (std::fread(p, 1, n, f) != n) throw std::runtime_error("io: short or corrupt file");
}

void put_u64(std::FILE* f, std::uint64_t v) { put(f, &v, sizeof v); }
void put_f64(std::FILE* f, double v) { put(f, &v, sizeof v); }

std::uint64_t get_u64(std::FILE* f) {
    std::uint64_t v;
    get(f, &v, sizeof v);
    return v;
}

double get_f64(std::FILE* f) {
    double v;
    get(f, &v, sizeof v);
    return v;
}

} // namespace

void dump_paths(const std::string& path, const BrownianBundle& bundle) {
    File out(path, "wb");
    const int N = bundle.grid.n_steps;
    put(out.f, kPathMagic, sizeof kPathMagic);
    put_u64(out.f, kVersion);
    put_u64(out.f, bundle.seed_w);
    put_u64(out.f, bundle.seed_b);
    put_u64(out.f, static_cast<std::uint64_t>(N));
    put_u64(out.f, static_cast<std::uint64_t>(bundle.M));
    put_u64(out.f, static_cast<std::uint64_t>(bundle.d));
    put_u64(out.f, static_cast<std::uint64_t>(bundle.l));
    put_f64(out.f, bundle.grid.t0);
    put_f64(out.f, bundle.grid.T);
    std::vector<double> row(static_cast<std::size_t>(N) * bundle.d);
    for (int m = 0; m < bundle.M; ++m) {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < bundle.d; ++j) row[static_cast<std::size_t>(i) * bundle.d + j] = bundle.dw(m, i, j);
        put(out.f, row.data(), row.size() * sizeof(double));
    }
    put(out.f, bundle.dB.data(), bundle.dB.size() * sizeof(double));
}

BrownianBundle load_paths(const std::string& path) {
    File in(path, "rb");
    char magic[8];
    get(in.f, magic, sizeof magic);
    if (std::memcmp(magic, kPathMagic, sizeof magic) != 0)
        throw std::invalid_argument("io: '" + path + "' is not a path dump");
    if (get_u64(in.f) != kVersion) throw std::invalid_argument("io: unsupported path dump version");
    BrownianBundle b;
    b.seed_w = get_u64(in.f);
    b.seed_b = get_u64(in.f);
    const auto N = static_cast<std::int64_t>(get_u64(in.f));
    const auto M = static_cast<std::int64_t>(get_u64(in.f));
    const auto d = static_cast<std::int64_t>(get_u64(in.f));
    const auto l = static_cast<std::int64_t>(get_u64(in.f));
    const double t0 = get_f64(in.f);
    const double T = get_f64(in.f);
    if (N < 1 || M < 1 || d < 1 || l < 1 || N > (1 << 24) || M > (1 << 30) || d > 1024 || l > 1024)
        throw std::invalid_argument("io: path dump header out of range");
    b.grid = TimeGrid(t0, T, static_cast<int>(N));
    b.M = static_cast<int>(M);
    b.d = static_cast<int>(d);
    b.l = static_cast<int>(l);
    b.from_file = true;
    b.dW_file.resize(static_cast<std::size_t>(M) * N * d);
    get(in.f, b.dW_file.data(), b.dW_file.size() * sizeof(double));
    b.dB.resize(static_cast<std::size_t>(N) * l);
    get(in.f, b.dB.data(), b.dB.size() * sizeof(double));
    return b;
}

void write_field_csv(const std::string& path, const RandomFieldU& field) {
    std::ostringstream ss;
    ss << "t,x,u,ux\n";
    char buf[128];
    const int n = field.space.n_nodes();
    for (int i = 0; i <= field.grid.n_steps; ++i) {
        const double t = field.grid.node(i);
        const double* u = field.row(i);
        const double* ux = field.ux_row(i);
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, field.space.node(j), u[j], ux[j]);
            ss << buf;
        }
    }
    write_text_file(path, ss.str());
}

void write_field_bin(const std::string& path, const RandomFieldU& field) {
    File out(path, "wb");
    put(out.f, kFieldMagic, sizeof kFieldMagic);
    put_u64(out.f, kVersion);
    put_u64(out.f, field.b_seed);
    put_u64(out.f, static_cast<std::uint64_t>(field.grid.n_steps));
    put_u64(out.f, static_cast<std::uint64_t>(field.space.J));
    put_f64(out.f, field.grid.t0);
    put_f64(out.f, field.grid.T);
    put_f64(out.f, field.space.x_min);
    put_f64(out.f, field.space.x_max);
    put(out.f, field.u.data(), field.u.size() * sizeof(double));
    put(out.f, field.ux.data(), field.ux.size() * sizeof(double));
    put(out.f, field.uxx.data(), field.uxx.size() * sizeof(double));
}

RandomFieldU read_field_bin(const std::string& path) {
    File in(path, "rb");
    char magic[8];
    get(in.f, magic, sizeof magic);
    if (std::memcmp(magic, kFieldMagic, sizeof magic) != 0)
        throw std::invalid_argument("io: '" + path + "' is not a field dump");
    if (get_u64(in.f) != kVersion) throw std::invalid_argument("io: unsupported field dump version");
    RandomFieldU field;
    field.b_seed = get_u64(in.f);
    const auto N = static_cast<std::int64_t>(get_u64(in.f));
    const auto J = static_cast<std::int64_t>(get_u64(in.f));
    const double t0 = get_f64(in.f);
    const double T = get_f64(in.f);
    field.space.x_min = get_f64(in.f);
    field.space.x_max = get_f64(in.f);
    if (N < 1 || J < 3 || N > (1 << 24) || J > (1 << 20))
        throw std::invalid_argument("io: field dump header out of range");
    field.grid = TimeGrid(t0, T, static_cast<int>(N));
    field.space.J = static_cast<int>(J);
    field.space.validate();
    const std::size_t sz = static_cast<std::size_t>(N + 1) * (J + 2);
    field.u.resize(sz);
    field.ux.resize(sz);
    field.uxx.resize(sz);
    get(in.f, field.u.data(), sz * sizeof(double));
    get(in.f, field.ux.data(), sz * sizeof(double));
    get(in.f, field.uxx.data(), sz * sizeof(double));
    return field;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("io: cannot open '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("io: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace bdsde
