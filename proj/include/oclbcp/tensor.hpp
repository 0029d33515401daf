#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace oclbcp::nn {

// Dense n-dimensional array with an optional gradient buffer of the same
// shape. Hosts both float (training) and double (verification) math.
template <typename T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> v;  // values, row-major
    std::vector<T> g;  // gradient, empty until alloc_grad()

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(numel()), T(0));
    }

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t e : shape) {
            if (e < 0) throw std::invalid_argument("tensor: negative extent");
            n *= e;
        }
        return n;
    }

    int64_t extent(size_t axis) const { return shape.at(axis); }

    bool has_grad() const { return !g.empty(); }
    void alloc_grad() { g.assign(v.size(), T(0)); }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T* grad() { return g.data(); }
    const T* grad() const { return g.data(); }
};

template <typename T, typename U>
inline bool same_shape(const Tensor<T>& a, const Tensor<U>& b) {
    return a.shape == b.shape;
}

// Throws std::runtime_error when any value is NaN or infinite. Used by ops
// to fail fast instead of propagating poisoned numbers.
template <typename T>
inline void ensure_finite(const Tensor<T>& t, const char* what) {
    const T* p = t.data();
    int64_t n = static_cast<int64_t>(t.v.size());
    bool ok = true;
#pragma omp parallel for schedule(static) reduction(&& : ok)
    for (int64_t i = 0; i < n; ++i) ok = ok && std::isfinite(static_cast<double>(p[i]));
    if (!ok) throw std::runtime_error(std::string("non-finite values in ") + what);
}

}  // namespace oclbcp::nn
