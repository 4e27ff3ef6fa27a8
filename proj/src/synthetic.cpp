#include "seqlab/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

namespace seqlab {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    return out;
}

} // namespace

void write_cyclic_dataset(const std::string& path, int num_items, int num_users, int seq_len) {
    auto out = open_out(path);
    for (int u = 0; u < num_users; ++u) {
        const int start = u % num_items;
        for (int k = 0; k < seq_len; ++k)
            out << 'u' << u << " i" << (start + k) % num_items << '\n';
    }
}

void write_zipf_dataset(const std::string& path, int num_items, int num_users, int seq_len,
                        double exponent, std::uint64_t seed) {
    std::vector<double> cdf(num_items);
    double acc = 0;
    for (int i = 0; i < num_items; ++i) {
        acc += 1.0 / std::pow((double)(i + 1), exponent);
        cdf[i] = acc;
    }
    for (auto& v : cdf) v /= acc;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto draw = [&] {
        const double u = u01(rng);
        int lo = 0, hi = num_items - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cdf[mid] < u) lo = mid + 1;
            else hi = mid;
        }
        return lo;
    };

    auto out = open_out(path);
    for (int u = 0; u < num_users; ++u)
        for (int k = 0; k < seq_len; ++k) out << 'u' << u << " i" << draw() << '\n';
}

void write_ml1m_shaped_dataset(const std::string& path) {
    constexpr int kUsers = 6040;
    constexpr int kItems = 3416;
    constexpr long long kInteractions = 999611;
    const long long base_len = kInteractions / kUsers;           // 165
    const long long longer_users = kInteractions - base_len * kUsers; // first N users get one more

    auto out = open_out(path);
    long long global = 0;
    for (int u = 0; u < kUsers; ++u) {
        const long long len = base_len + (u < longer_users ? 1 : 0);
        for (long long k = 0; k < len; ++k, ++global)
            out << 'u' << u << " i" << global % kItems << '\n';
    }
}

} // namespace seqlab
