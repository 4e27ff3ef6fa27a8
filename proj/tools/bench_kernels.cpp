// Benchmark of the OpenMP kernels against their serial reference versions.
// Also asserts that parallel and serial outputs are bit-identical, which the
// kernels guarantee by parallelizing only across independent output rows.

#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqlab/kernels.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock_type::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
    }
    return best;
}

void report(const std::string& name, double serial_s, double parallel_s, bool identical) {
    std::cout << std::left << std::setw(18) << name << std::right << std::fixed
              << std::setprecision(3) << std::setw(10) << serial_s * 1e3 << " ms" << std::setw(10)
              << parallel_s * 1e3 << " ms  speedup " << std::setprecision(2)
              << serial_s / parallel_s << (identical ? "  (bit-identical)" : "  MISMATCH!") << '\n';
    if (!identical) std::exit(1);
}

} // namespace

int main(int argc, char** argv) {
    const int m = argc > 1 ? std::atoi(argv[1]) : 512;
    const int k = argc > 2 ? std::atoi(argv[2]) : 512;
    const int n = argc > 3 ? std::atoi(argv[3]) : 512;
    const int reps = 5;

#ifdef _OPENMP
    std::cout << "threads: " << omp_get_max_threads() << '\n';
#else
    std::cout << "threads: 1 (compiled without OpenMP)\n";
#endif
    std::cout << "shapes: " << m << " x " << k << " x " << n << ", best of " << reps << "\n\n";

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> a((std::size_t)m * k), b((std::size_t)k * n);
    std::vector<float> c1((std::size_t)m * n), c2((std::size_t)m * n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);

    namespace ker = seqlab::kernels;
    auto same = [&] { return std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0; };

    double ts = time_best_of(reps, [&] { ker::matmul_serial(a.data(), b.data(), c1.data(), m, k, n); });
    double tp = time_best_of(reps, [&] { ker::matmul(a.data(), b.data(), c2.data(), m, k, n); });
    report("matmul", ts, tp, same());

    std::vector<float> bt((std::size_t)n * k);
    for (auto& v : bt) v = u(rng);
    ts = time_best_of(reps, [&] { ker::matmul_nt_serial(a.data(), bt.data(), c1.data(), m, k, n); });
    tp = time_best_of(reps, [&] { ker::matmul_nt(a.data(), bt.data(), c2.data(), m, k, n); });
    report("matmul_nt", ts, tp, same());

    // matmul_tn parallelizes over k; output is k x n from an m x k and m x n input
    std::vector<float> a2((std::size_t)m * k), d((std::size_t)m * n);
    for (auto& v : a2) v = u(rng);
    for (auto& v : d) v = u(rng);
    std::vector<float> g1((std::size_t)k * n), g2((std::size_t)k * n);
    ts = time_best_of(reps, [&] { ker::matmul_tn_serial(a2.data(), d.data(), g1.data(), m, k, n); });
    tp = time_best_of(reps, [&] { ker::matmul_tn(a2.data(), d.data(), g2.data(), m, k, n); });
    report("matmul_tn", ts, tp,
           std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(float)) == 0);

    ts = time_best_of(reps, [&] {
        ker::softmax_rows_serial(a.data(), (const float*)nullptr, c1.data(), m, k);
    });
    tp = time_best_of(reps, [&] {
        ker::softmax_rows(a.data(), (const float*)nullptr, c2.data(), m, k);
    });
    report("softmax_rows", ts, tp,
           std::memcmp(c1.data(), c2.data(), (std::size_t)m * k * sizeof(float)) == 0);

    std::vector<float> gain(k, 1.0f), bias(k, 0.0f);
    ts = time_best_of(reps, [&] {
        ker::layer_norm_rows_serial(a.data(), gain.data(), bias.data(), c1.data(), m, k, 1e-12f);
    });
    tp = time_best_of(reps, [&] {
        ker::layer_norm_rows(a.data(), gain.data(), bias.data(), c2.data(), m, k, 1e-12f);
    });
    report("layer_norm_rows", ts, tp,
           std::memcmp(c1.data(), c2.data(), (std::size_t)m * k * sizeof(float)) == 0);

    ts = time_best_of(reps, [&] { ker::gelu_serial(a.data(), c1.data(), a.size()); });
    tp = time_best_of(reps, [&] { ker::gelu(a.data(), c2.data(), a.size()); });
    report("gelu", ts, tp,
           std::memcmp(c1.data(), c2.data(), a.size() * sizeof(float)) == 0);

    return 0;
}
