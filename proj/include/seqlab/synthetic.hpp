#pragma once

// Deterministic synthetic interaction files (pair-per-line format) used by
// the test and acceptance suites and for desk-scale experiments.

#include <cstdint>
#include <string>

namespace seqlab {

// each user walks a fixed cycle over the catalogue: the next item is always
// the current item's successor modulo num_items
void write_cyclic_dataset(const std::string& path, int num_items, int num_users, int seq_len);

// interactions drawn iid from a Zipf-like popularity distribution
void write_zipf_dataset(const std::string& path, int num_items, int num_users, int seq_len,
                        double exponent, std::uint64_t seed);

// a file with exactly the ML-1M preprocessed corpus shape: 6,040 users,
// 3,416 items and 999,611 interactions
void write_ml1m_shaped_dataset(const std::string& path);

} // namespace seqlab
