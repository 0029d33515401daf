// Timing comparison between the blocked OpenMP kernels and their serial
// reference implementations. Run with OCLBCP_THREADS to vary the worker
// count; each kernel reports milliseconds and the relative speedup.

#include <chrono>
#include <cstdio>
#include <vector>

#include "oclbcp/butterworth.hpp"
#include "oclbcp/codes.hpp"
#include "oclbcp/gemm.hpp"
#include "oclbcp/nn_ops.hpp"
#include "oclbcp/parallel.hpp"
#include "oclbcp/ref/reference.hpp"
#include "oclbcp/rng.hpp"

using namespace oclbcp;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double gflop = 0.0) {
    std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
    if (gflop > 0.0) std::printf("   %7.2f GFLOP/s", gflop / (parallel_ms * 1e-3) * 1e-9);
    std::printf("\n");
}

void fill(std::vector<float>& v, Rng& rng) {
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
}

}  // namespace

int main() {
    apply_thread_cap_from_env();
    std::printf("workers: %d\n\n", worker_count());
    Rng rng(7);

    {
        const int64_t m = 256, n = 2048, k = 1024;
        std::vector<float> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n),
            bt(static_cast<size_t>(n) * k), c(static_cast<size_t>(m) * n);
        fill(a, rng);
        fill(b, rng);
        fill(bt, rng);
        double flops = 2.0 * m * n * k;
        double s = time_best_of(2, [&] { ref::gemm_nn_naive<float>(m, n, k, a.data(), k, b.data(), n, c.data(), n); });
        double p = time_best_of(3, [&] { nn::gemm_nn<float>(m, n, k, a.data(), k, b.data(), n, c.data(), n); });
        report("gemm_nn 256x2048x1024", s, p, flops);
        s = time_best_of(2, [&] { ref::gemm_nt_naive<float>(m, n, k, a.data(), k, bt.data(), k, c.data(), n); });
        p = time_best_of(3, [&] { nn::gemm_nt<float>(m, n, k, a.data(), k, bt.data(), k, c.data(), n); });
        report("gemm_nt 256x2048x1024", s, p, flops);
        std::vector<float> at(static_cast<size_t>(k) * m);
        fill(at, rng);
        s = time_best_of(2, [&] { ref::gemm_tn_naive<float>(m, n, k, at.data(), m, b.data(), n, c.data(), n); });
        p = time_best_of(3, [&] { nn::gemm_tn<float>(m, n, k, at.data(), m, b.data(), n, c.data(), n); });
        report("gemm_tn 256x2048x1024", s, p, flops);
    }

    {
        nn::Tensor<float> x({8, 64, 80, 80}), w({128, 64, 2, 2}), b({128});
        for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        for (auto& v : w.v) v = static_cast<float>(rng.uniform(-0.1, 0.1));
        double flops = 2.0 * 8 * 128 * 64 * 4 * 80 * 80;
        double s = time_best_of(2, [&] { ref::conv2d_forward_naive(x, w, b); });
        double p = time_best_of(3, [&] { nn::conv2d_forward(x, w, b); });
        report("conv2d 8x64x80x80 -> 128", s, p, flops);
    }

    {
        img::GrayImage im(512, 512);
        Rng r2(11);
        for (auto& v : im.data) v = r2.next_double();
        double s = time_best_of(2, [&] { ref::descriptor_map_naive(im, codes::kDefaultLtpThreshold); });
        double p = time_best_of(3, [&] { codes::descriptor_map(im, codes::kDefaultLtpThreshold); });
        report("descriptor_map 512x512", s, p);
    }

    {
        img::GrayImage im(96, 96);
        Rng r2(13);
        for (auto& v : im.data) v = r2.next_double();
        double s = time_best_of(1, [&] { ref::dft2_naive(im.data, im.height, im.width); });
        double p = time_best_of(2, [&] { img::dft2(im.data, im.height, im.width); });
        report("dft2 96x96", s, p);
    }

    return 0;
}
