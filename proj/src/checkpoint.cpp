#include "seqlab/checkpoint.hpp"

#include <fstream>

namespace seqlab {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'L', 'A', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw CheckpointError("unexpected end of checkpoint file");
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, ckpt.scalar_size);
    write_u32(out, (std::uint32_t)ckpt.records.size());
    for (const auto& rec : ckpt.records) {
        write_u32(out, (std::uint32_t)rec.name.size());
        out.write(rec.name.data(), (std::streamsize)rec.name.size());
        write_u32(out, rec.rows);
        write_u32(out, rec.cols);
        out.write(reinterpret_cast<const char*>(rec.raw.data()), (std::streamsize)rec.raw.size());
    }
    if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw CheckpointError("not a checkpoint file: " + path);
    const auto version = read_u32(in);
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.scalar_size = read_u32(in);
    if (ckpt.scalar_size != 4 && ckpt.scalar_size != 8)
        throw CheckpointError("bad scalar size in checkpoint");
    const auto count = read_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointRecord rec;
        const auto name_len = read_u32(in);
        rec.name.resize(name_len);
        in.read(rec.name.data(), name_len);
        rec.rows = read_u32(in);
        rec.cols = read_u32(in);
        rec.raw.resize((std::size_t)rec.rows * rec.cols * ckpt.scalar_size);
        in.read(reinterpret_cast<char*>(rec.raw.data()), (std::streamsize)rec.raw.size());
        if (!in) throw CheckpointError("unexpected end of checkpoint file");
        ckpt.records.push_back(std::move(rec));
    }
    return ckpt;
}

} // namespace seqlab
