#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "oclbcp/rng.hpp"
#include "oclbcp/tensor.hpp"

namespace oclbcp::nn {

// Per-parameter optimizer state.
template <typename T>
struct AdamState {
    std::vector<T> m, v;
    int64_t step = 0;
};

// Named parameter registry with insertion-order iteration, so optimizer
// sweeps and serialization are independent of hash layout. A name maps to
// exactly one tensor.
template <typename T>
class ParamStore {
public:
    Tensor<T>& create(const std::string& name, std::vector<int64_t> shape) {
        if (params_.count(name)) throw std::invalid_argument("param exists: " + name);
        order_.push_back(name);
        auto& e = params_[name];
        e.value = Tensor<T>(std::move(shape));
        e.value.alloc_grad();
        e.adam.m.assign(e.value.v.size(), T(0));
        e.adam.v.assign(e.value.v.size(), T(0));
        return e.value;
    }

    Tensor<T>& get(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::invalid_argument("no such param: " + name);
        return it->second.value;
    }
    const Tensor<T>& get(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::invalid_argument("no such param: " + name);
        return it->second.value;
    }
    bool has(const std::string& name) const { return params_.count(name) != 0; }

    AdamState<T>& adam(const std::string& name) { return params_.at(name).adam; }

    const std::vector<std::string>& names() const { return order_; }

    size_t total_values() const {
        size_t n = 0;
        for (const auto& name : order_) n += params_.at(name).value.v.size();
        return n;
    }

    void zero_grads() {
        for (const auto& name : order_) params_.at(name).value.zero_grad();
    }

private:
    struct Entry {
        Tensor<T> value;
        AdamState<T> adam;
    };
    std::vector<std::string> order_;
    std::map<std::string, Entry> params_;
};

struct OptimizerConfig {
    double initial_lr = 1e-3;
    double lr_decay_factor = 0.1;  // applied once per 10 epochs
    double min_lr = 1e-5;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int epochs = 200;
};

// Stepwise schedule: the rate drops by lr_decay_factor every 10 epochs and
// never falls below min_lr. Implemented as division by the reciprocal so
// decade factors stay exact in binary floating point.
inline double learning_rate_for_epoch(const OptimizerConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("learning_rate_for_epoch: negative epoch");
    int decades = epoch / 10;
    double reciprocal = 1.0 / cfg.lr_decay_factor;
    double lr = cfg.initial_lr / std::pow(reciprocal, static_cast<double>(decades));
    return std::max(lr, cfg.min_lr);
}

// One Adam update over every parameter in registration order. Weight decay
// is added to the raw gradient before the moment updates. Throws when a
// parameter has no gradient buffer.
template <typename T>
void adam_step(ParamStore<T>& store, const OptimizerConfig& cfg, int epoch) {
    double lr = learning_rate_for_epoch(cfg, epoch);
    for (const auto& name : store.names()) {
        Tensor<T>& p = store.get(name);
        if (!p.has_grad()) throw std::runtime_error("adam_step: missing gradient for " + name);
        AdamState<T>& st = store.adam(name);
        st.step += 1;
        double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
        double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
        T* theta = p.data();
        T* grad = p.grad();
        T* m = st.m.data();
        T* v = st.v.data();
        int64_t n = static_cast<int64_t>(p.v.size());
        const T wd = static_cast<T>(cfg.weight_decay);
        const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            T gi = grad[i] + wd * theta[i];
            m[i] = b1 * m[i] + (T(1) - b1) * gi;
            v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
            double mhat = static_cast<double>(m[i]) / bc1;
            double vhat = static_cast<double>(v[i]) / bc2;
            theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                                      lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    }
}

// Checkpoint format ("DSNN", little-endian): magic, u32 format version,
// u32 parameter count, then per parameter a u32 name length, the name bytes,
// u32 rank, u64 extents, and float32 values. A trailing flag byte marks
// whether Adam state follows (per parameter: float32 m, float32 v, u64 step).
namespace ckpt_detail {

constexpr char kMagic[4] = {'D', 'S', 'N', 'N'};
constexpr uint32_t kVersion = 1;

inline void put_u32(std::ostream& o, uint32_t v) { o.write(reinterpret_cast<char*>(&v), 4); }
inline void put_u64(std::ostream& o, uint64_t v) { o.write(reinterpret_cast<char*>(&v), 8); }
inline uint32_t get_u32(std::istream& i) {
    uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t get_u64(std::istream& i) {
    uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

template <typename T>
void put_f32(std::ostream& o, const std::vector<T>& v) {
    std::vector<float> buf(v.size());
    for (size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v[i]);
    o.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
}

template <typename T>
void get_f32(std::istream& in, std::vector<T>& v) {
    std::vector<float> buf(v.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(buf[i]);
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::string& path,
                     bool with_adam_state = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(ckpt_detail::kMagic, 4);
    ckpt_detail::put_u32(out, ckpt_detail::kVersion);
    ckpt_detail::put_u32(out, static_cast<uint32_t>(store.names().size()));
    for (const auto& name : store.names()) {
        const Tensor<T>& p = store.get(name);
        ckpt_detail::put_u32(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        ckpt_detail::put_u32(out, static_cast<uint32_t>(p.shape.size()));
        for (int64_t e : p.shape) ckpt_detail::put_u64(out, static_cast<uint64_t>(e));
        ckpt_detail::put_f32(out, p.v);
    }
    out.put(with_adam_state ? 1 : 0);
    if (with_adam_state) {
        auto& mut = const_cast<ParamStore<T>&>(store);
        for (const auto& name : store.names()) {
            auto& st = mut.adam(name);
            ckpt_detail::put_f32(out, st.m);
            ckpt_detail::put_f32(out, st.v);
            ckpt_detail::put_u64(out, static_cast<uint64_t>(st.step));
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

// Loads a checkpoint into a fresh store (parameters are created in file
// order). Returns true when Adam state was present and restored.
template <typename T>
bool load_checkpoint(ParamStore<T>& store, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, ckpt_detail::kMagic, 4) != 0)
        throw std::runtime_error(path + ": not a checkpoint file");
    uint32_t ver = ckpt_detail::get_u32(in);
    if (ver != ckpt_detail::kVersion) throw std::runtime_error(path + ": unsupported version");
    uint32_t count = ckpt_detail::get_u32(in);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = ckpt_detail::get_u32(in);
        if (!in || len > 4096) throw std::runtime_error(path + ": corrupt checkpoint");
        std::string name(len, '\0');
        in.read(name.data(), len);
        uint32_t rank = ckpt_detail::get_u32(in);
        if (!in || rank > 8) throw std::runtime_error(path + ": corrupt checkpoint");
        std::vector<int64_t> shape(rank);
        for (uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<int64_t>(ckpt_detail::get_u64(in));
        Tensor<T>& p = store.has(name) ? store.get(name) : store.create(name, shape);
        if (p.shape != shape) throw std::runtime_error(path + ": shape mismatch for " + name);
        ckpt_detail::get_f32(in, p.v);
        if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    }
    int flag = in.get();
    if (flag == 1) {
        for (const auto& name : store.names()) {
            auto& st = store.adam(name);
            ckpt_detail::get_f32(in, st.m);
            ckpt_detail::get_f32(in, st.v);
            st.step = static_cast<int64_t>(ckpt_detail::get_u64(in));
        }
        if (!in) throw std::runtime_error(path + ": truncated optimizer state");
        return true;
    }
    return false;
}

// Fills a parameter with fan-in scaled normal noise: std = sqrt(2 / fan_in).
template <typename T>
void he_normal_fill(Tensor<T>& p, int64_t fan_in, Rng& rng) {
    double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& x : p.v) x = static_cast<T>(rng.normal() * std);
}

}  // namespace oclbcp::nn
