#include "ctt/tt_io.hpp"

#include "binio.hpp"
#include "ctt/error.hpp"

#include <fstream>

namespace ctt {

namespace {
constexpr std::uint32_t k_version = 1;
constexpr std::uint64_t k_max_dim = 1u << 24;
}  // namespace

void write_tt(std::ostream& os, const TTTensor& a) {
    os.write("CTTT", 4);
    binio::put_u32(os, k_version);
    binio::put_u64(os, a.order());
    binio::put_u64(os, a.output_rank());
    for (auto n : a.mode_sizes()) binio::put_u64(os, n);
    for (auto r : a.ranks()) binio::put_u64(os, r);
    for (const auto& c : a.cores())
        for (double v : c.values()) binio::put_f64(os, v);
}

TTTensor read_tt(std::istream& is) {
    binio::expect_magic(is, "CTTT");
    if (binio::get_u32(is) != k_version) throw std::runtime_error("unsupported tensor train container version");
    const auto d = binio::get_u64(is);
    const auto r0 = binio::get_u64(is);
    if (d == 0 || d > 4096 || r0 == 0 || r0 > k_max_dim) throw std::runtime_error("corrupt tensor train header");
    Shape modes(d);
    for (auto& n : modes) n = binio::get_u64(is);
    std::vector<std::size_t> ranks(d + 1);
    for (auto& r : ranks) r = binio::get_u64(is);
    if (ranks.front() != r0 || ranks.back() != 1) throw std::runtime_error("corrupt tensor train ranks");
    std::vector<DenseTensor> cores;
    for (std::size_t j = 0; j < d; ++j) {
        if (modes[j] == 0 || modes[j] > k_max_dim || ranks[j] == 0 || ranks[j] > k_max_dim || ranks[j + 1] == 0 ||
            ranks[j + 1] > k_max_dim)
            throw std::runtime_error("corrupt tensor train dimensions");
        Shape s{ranks[j], modes[j], ranks[j + 1]};
        std::vector<double> data(shape_size(s));
        for (auto& v : data) v = binio::get_f64(is);
        cores.emplace_back(s, std::move(data));
    }
    return TTTensor(std::move(cores));
}

void write_dense(std::ostream& os, const DenseTensor& t) {
    os.write("CTTD", 4);
    binio::put_u32(os, k_version);
    binio::put_u64(os, t.order());
    for (auto n : t.shape()) binio::put_u64(os, n);
    for (double v : t.values()) binio::put_f64(os, v);
}

DenseTensor read_dense(std::istream& is) {
    binio::expect_magic(is, "CTTD");
    if (binio::get_u32(is) != k_version) throw std::runtime_error("unsupported dense tensor container version");
    const auto d = binio::get_u64(is);
    if (d == 0 || d > 64) throw std::runtime_error("corrupt dense tensor header");
    Shape s(d);
    std::uint64_t total = 1;
    for (auto& n : s) {
        n = binio::get_u64(is);
        if (n == 0 || n > k_max_dim) throw std::runtime_error("corrupt dense tensor shape");
        total *= n;
        if (total > (1ull << 32)) throw std::runtime_error("dense tensor too large");
    }
    std::vector<double> data(total);
    for (auto& v : data) v = binio::get_f64(is);
    return DenseTensor(s, std::move(data));
}

void save_tt(const std::filesystem::path& path, const TTTensor& a) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tt(os, a);
}

TTTensor load_tt(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_tt(is);
}

}  // namespace ctt
