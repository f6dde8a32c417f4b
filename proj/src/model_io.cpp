#include "binio.hpp"
#include "ctt/error.hpp"
#include "ctt/model.hpp"
#include "ctt/tt_io.hpp"

#include <fstream>

namespace ctt {

namespace {
constexpr std::uint32_t k_model_version = 1;
constexpr std::uint32_t k_tag_dense = 0;
constexpr std::uint32_t k_tag_tt = 1;
}  // namespace

//   "CTTM" | u32 version | basis name | u32 lift kind | u64 p | u64 d
//   | f64 lift matrix (p x d, row-major) | f64 offset[p]
//   | u64 d_o | u64 slots[d_o] | u64 L | per layer: u32 tag, dense or TT container
void write_model(std::ostream& os, const CTTModel& m) {
    os.write("CTTM", 4);
    binio::put_u32(os, k_model_version);
    binio::put_bytes(os, m.basis().name());
    const auto& lift = m.lift();
    binio::put_u32(os, static_cast<std::uint32_t>(lift.kind));
    binio::put_u64(os, lift.output_dim());
    binio::put_u64(os, lift.input_dim());
    for (Eigen::Index i = 0; i < lift.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < lift.matrix.cols(); ++j) binio::put_f64(os, lift.matrix(i, j));
    for (Eigen::Index i = 0; i < lift.offset.size(); ++i) binio::put_f64(os, lift.offset(i));
    binio::put_u64(os, m.retraction().slots.size());
    for (auto s : m.retraction().slots) binio::put_u64(os, s);
    binio::put_u64(os, m.depth());
    for (const auto& l : m.layers()) {
        if (l.is_tt()) {
            binio::put_u32(os, k_tag_tt);
            write_tt(os, l.tt());
        } else {
            binio::put_u32(os, k_tag_dense);
            write_dense(os, l.dense());
        }
    }
}

CTTModel read_model(std::istream& is) {
    binio::expect_magic(is, "CTTM");
    if (binio::get_u32(is) != k_model_version) throw std::runtime_error("unsupported model container version");
    const auto basis = FeatureBasis::from_name(binio::get_bytes(is, 64));
    const auto kind = binio::get_u32(is);
    if (kind > static_cast<std::uint32_t>(Lift::Kind::custom)) throw std::runtime_error("corrupt lift kind");
    const auto p = binio::get_u64(is);
    const auto d = binio::get_u64(is);
    if (p == 0 || p > 4096 || d == 0 || d > p + 1) throw std::runtime_error("corrupt lift dimensions");
    Lift lift;
    lift.kind = static_cast<Lift::Kind>(kind);
    lift.matrix.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
    lift.offset.resize(static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < lift.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < lift.matrix.cols(); ++j) lift.matrix(i, j) = binio::get_f64(is);
    for (Eigen::Index i = 0; i < lift.offset.size(); ++i) lift.offset(i) = binio::get_f64(is);
    const auto d_o = binio::get_u64(is);
    if (d_o == 0 || d_o > p) throw std::runtime_error("corrupt retraction size");
    std::vector<std::size_t> slots(d_o);
    for (auto& s : slots) s = binio::get_u64(is);
    const auto depth = binio::get_u64(is);
    if (depth > (1u << 20)) throw std::runtime_error("corrupt layer count");
    std::vector<CTTLayer> layers;
    for (std::uint64_t k = 0; k < depth; ++k) {
        const auto tag = binio::get_u32(is);
        if (tag == k_tag_tt)
            layers.emplace_back(read_tt(is));
        else if (tag == k_tag_dense)
            layers.emplace_back(read_dense(is));
        else
            throw std::runtime_error("corrupt layer tag");
    }
    return CTTModel(basis, std::move(lift), std::move(layers), Retraction::select(std::move(slots), p));
}

void save_model(const std::filesystem::path& path, const CTTModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_model(os, m);
}

CTTModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_model(is);
}

}  // namespace ctt
