#pragma once

// Flat binary parameter container: version header followed by
// (name, shape, raw little-endian values) records. Round-trips bit-exactly.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "seqlab/errors.hpp"
#include "seqlab/tensor.hpp"

namespace seqlab {

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CheckpointRecord {
    std::string name;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::byte> raw; // rows*cols scalars
};

struct Checkpoint {
    std::uint32_t scalar_size = 4; // 4 = float, 8 = double
    std::vector<CheckpointRecord> records;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

template <class S>
Checkpoint checkpoint_from_params(const std::vector<TensorPtr<S>>& params) {
    Checkpoint ckpt;
    ckpt.scalar_size = sizeof(S);
    char name[32];
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::snprintf(name, sizeof name, "param_%04zu", i);
        CheckpointRecord rec;
        rec.name = name;
        rec.rows = (std::uint32_t)params[i]->rows;
        rec.cols = (std::uint32_t)params[i]->cols;
        rec.raw.resize(params[i]->size() * sizeof(S));
        std::memcpy(rec.raw.data(), params[i]->data.data(), rec.raw.size());
        ckpt.records.push_back(std::move(rec));
    }
    return ckpt;
}

template <class S>
void params_from_checkpoint(const Checkpoint& ckpt, const std::vector<TensorPtr<S>>& params) {
    if (ckpt.scalar_size != sizeof(S))
        throw CheckpointError("checkpoint scalar size " + std::to_string(ckpt.scalar_size) +
                              " does not match model precision " + std::to_string(sizeof(S)));
    if (ckpt.records.size() != params.size())
        throw CheckpointError("checkpoint has " + std::to_string(ckpt.records.size()) +
                              " records, model expects " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& rec = ckpt.records[i];
        if ((int)rec.rows != params[i]->rows || (int)rec.cols != params[i]->cols)
            throw CheckpointError("shape mismatch for record " + rec.name);
        std::memcpy(params[i]->data.data(), rec.raw.data(), rec.raw.size());
    }
}

} // namespace seqlab
