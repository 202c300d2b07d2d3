#include "casumm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "casumm/errors.hpp"

namespace casumm::nn {

namespace {

const char kMagic[8] = {'C', 'A', 'S', 'U', 'M', 'M', 'C', 'K'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_u32(os, kCheckpointVersion);
    auto all = params.all();
    write_u32(os, static_cast<std::uint32_t>(all.size()));
    std::uint64_t offset = 0;
    for (const Parameter* p : all) {
        write_u32(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_u32(os, static_cast<std::uint32_t>(p->value.shape.size()));
        for (int d : p->value.shape) write_u32(os, static_cast<std::uint32_t>(d));
        write_u64(os, offset);
        offset += static_cast<std::uint64_t>(p->value.numel());
    }
    write_u64(os, offset * 8);
    for (const Parameter* p : all)
        for (double d : p->value.v) write_f64(os, d);
    if (!os) throw DataError("checkpoint write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("not a checkpoint file: " + path);
    std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) +
                        " in " + path);
    std::uint32_t count = read_u32(is);
    struct Entry {
        std::string name;
        std::vector<int> shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries(count);
    for (auto& e : entries) {
        std::uint32_t len = read_u32(is);
        e.name.resize(len);
        is.read(e.name.data(), len);
        std::uint32_t ndim = read_u32(is);
        e.shape.resize(ndim);
        for (auto& d : e.shape) d = static_cast<int>(read_u32(is));
        e.offset = read_u64(is);
    }
    std::uint64_t data_bytes = read_u64(is);
    std::vector<double> data(data_bytes / 8);
    for (auto& d : data) d = read_f64(is);
    if (!is) throw DataError("truncated checkpoint: " + path);

    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (auto& e : entries) {
        Tensor t = Tensor::zeros(e.shape);
        if (e.offset + static_cast<std::uint64_t>(t.numel()) > data.size())
            throw DataError("checkpoint entry out of range: " + e.name);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(e.offset),
                  data.begin() + static_cast<std::ptrdiff_t>(e.offset) + t.numel(),
                  t.v.begin());
        out.emplace_back(std::move(e.name), std::move(t));
    }
    return out;
}

void load_checkpoint(const std::string& path, ParameterStore& params) {
    auto entries = read_checkpoint(path);
    std::size_t matched = 0;
    for (auto& [name, tensor] : entries) {
        Parameter* p = params.find(name);
        if (!p) throw DataError("checkpoint entry has no matching parameter: " + name);
        if (p->value.shape != tensor.shape)
            throw DataError("checkpoint shape mismatch for " + name + ": stored " +
                            tensor.shape_str() + " vs model " + p->value.shape_str());
        p->value = std::move(tensor);
        ++matched;
    }
    if (matched != params.size())
        throw DataError("checkpoint is missing parameters: " + path);
}

}  // namespace casumm::nn
