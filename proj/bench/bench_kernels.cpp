// Timing comparison of the OpenMP kernels against their serial references:
// gemm at training-relevant shapes and the layered-oracle tabulation.
#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "nbrdf/core/rng.hpp"
#include "nbrdf/layered/oracle.hpp"
#include "nbrdf/nn/tensor.hpp"

using namespace nbrdf;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F> double time_ms(int reps, const F &fn) {
    fn(); // warmup
    double t0 = now_ms();
    for (int r = 0; r < reps; ++r)
        fn();
    return (now_ms() - t0) / reps;
}

void bench_gemm(int m, int k, int n, int reps) {
    std::vector<float> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n),
        c(static_cast<size_t>(m) * n), c_ref(c.size());
    RngStream rng(7, 0);
    for (auto &v : a)
        v = rng.next_float() - 0.5f;
    for (auto &v : b)
        v = rng.next_float() - 0.5f;

    double t_par = time_ms(reps, [&] { nn::gemm_nn(a.data(), b.data(), c.data(), m, k, n); });
    double t_ser =
        time_ms(reps, [&] { nn::gemm_nn_serial(a.data(), b.data(), c_ref.data(), m, k, n); });

    float max_diff = 0;
    for (size_t i = 0; i < c.size(); ++i)
        max_diff = std::max(max_diff, std::abs(c[i] - c_ref[i]));

    double gflop = 2.0 * m * k * n * 1e-6;
    std::printf("gemm %4dx%4dx%4d  omp %8.3f ms (%6.2f GFLOP/s)  serial %8.3f ms "
                "(%6.2f GFLOP/s)  speedup %.2fx  max|diff| %.2e\n",
                m, k, n, t_par, gflop / t_par, t_ser, gflop / t_ser, t_ser / t_par, max_diff);
}

void bench_tabulation() {
    LayerStack stack;
    stack.top = {0.3, 1.5};
    stack.medium = {0.8, 1.0};
    stack.bottom_conductor = {0.4, 0.9};
    auto grid = stratified_hemisphere_grid(4, 6);

    double t_par = time_ms(1, [&] { tabulate_layered(stack, grid, 256, 11); });
    int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    double t_ser = time_ms(1, [&] { tabulate_layered(stack, grid, 256, 11); });
    omp_set_num_threads(saved);

    std::printf("oracle tabulation 24x24 pairs, 256 paths: %d threads %8.1f ms, 1 thread "
                "%8.1f ms, speedup %.2fx\n",
                saved, t_par, t_ser, t_ser / t_par);
}

} // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    bench_gemm(256, 38, 256, 20);
    bench_gemm(1024, 256, 256, 10);
    bench_gemm(1024, 256, 128, 10);
    bench_gemm(64, 512, 512, 20);
    bench_tabulation();
    return 0;
}
