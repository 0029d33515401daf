#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "oclbcp/image.hpp"
#include "oclbcp/nn_ops.hpp"
#include "oclbcp/param_store.hpp"
#include "oclbcp/rng.hpp"

namespace oclbcp::net {

enum class Side { left, right };
enum class StreamMode { dual, rgb_only, descriptor_only };

inline const char* side_name(Side s) { return s == Side::left ? "left" : "right"; }
inline Side side_from_name(const std::string& s) {
    if (s == "left") return Side::left;
    if (s == "right") return Side::right;
    throw std::invalid_argument("unknown side: " + s);
}
inline const char* mode_name(StreamMode m) {
    switch (m) {
        case StreamMode::dual: return "dual";
        case StreamMode::rgb_only: return "rgb_only";
        default: return "descriptor_only";
    }
}
inline StreamMode mode_from_name(const std::string& s) {
    if (s == "dual") return StreamMode::dual;
    if (s == "rgb_only") return StreamMode::rgb_only;
    if (s == "descriptor_only") return StreamMode::descriptor_only;
    throw std::invalid_argument("unknown stream mode: " + s);
}

struct ConvSpec {
    int out_channels;
    bool pool_after;
};

// Trunk used at full scale: eight 2x2 convolutions with halving pools after
// stages 1, 2, 4 and 6, shrinking 80 -> 40 -> 20 -> 10 -> 5.
inline std::vector<ConvSpec> default_trunk() {
    return {{64, true}, {128, true}, {256, false}, {256, true},
            {512, false}, {512, true}, {512, false}, {512, false}};
}

struct NetworkConfig {
    int input_size = 80;
    std::vector<ConvSpec> convs = default_trunk();
    int proj_dim = 4096;
    int head_hidden = 4096;
    int num_classes = 0;
    StreamMode mode = StreamMode::dual;
    Side side = Side::left;
};

// Reduced topology for fast functional tests: three conv stages with two
// pools, sized for small square inputs.
inline NetworkConfig miniature_config(int num_classes, int input_size = 8, int width = 8) {
    NetworkConfig c;
    c.input_size = input_size;
    c.convs = {{width, true}, {width * 2, true}, {width * 2, false}};
    c.proj_dim = 32;
    c.head_hidden = 32;
    c.num_classes = num_classes;
    return c;
}

// Two-stream classifier over an RGB crop and its color-texture transform.
// Both streams run the same trunk parameters (a single tensor per layer, so
// weight sharing holds by construction), their projections are fused by
// elementwise max and by sum, and each fusion feeds its own classification
// head. In a single-stream mode one input runs the trunk and a single head.
template <typename T>
class DualStreamNet {
public:
    DualStreamNet(NetworkConfig cfg, uint64_t init_seed, bool zero_init = false)
        : cfg_(std::move(cfg)) {
        validate_config();
        Rng rng(init_seed);
        int s = cfg_.input_size;
        int cin = 3;
        for (size_t i = 0; i < cfg_.convs.size(); ++i) {
            const auto& spec = cfg_.convs[i];
            std::string base = "conv" + std::to_string(i + 1);
            auto& w = params_.create(base + ".w", {spec.out_channels, cin, 2, 2});
            params_.create(base + ".b", {spec.out_channels});
            if (!zero_init) nn::he_normal_fill(w, static_cast<int64_t>(cin) * 4, rng);
            cin = spec.out_channels;
            if (spec.pool_after) s /= 2;
        }
        flat_dim_ = static_cast<int64_t>(cin) * s * s;
        auto& pw = params_.create("proj.w", {cfg_.proj_dim, flat_dim_});
        params_.create("proj.b", {cfg_.proj_dim});
        if (!zero_init) nn::he_normal_fill(pw, flat_dim_, rng);
        for (const std::string& head : head_names()) {
            auto& w1 = params_.create(head + ".fc1.w", {cfg_.head_hidden, cfg_.proj_dim});
            params_.create(head + ".fc1.b", {cfg_.head_hidden});
            auto& w2 = params_.create(head + ".fc2.w", {cfg_.head_hidden, cfg_.head_hidden});
            params_.create(head + ".fc2.b", {cfg_.head_hidden});
            auto& w3 = params_.create(head + ".out.w", {cfg_.num_classes, cfg_.head_hidden});
            params_.create(head + ".out.b", {cfg_.num_classes});
            if (!zero_init) {
                nn::he_normal_fill(w1, cfg_.proj_dim, rng);
                nn::he_normal_fill(w2, cfg_.head_hidden, rng);
                nn::he_normal_fill(w3, cfg_.head_hidden, rng);
            }
        }
    }

    const NetworkConfig& config() const { return cfg_; }
    nn::ParamStore<T>& params() { return params_; }
    const nn::ParamStore<T>& params() const { return params_; }
    int64_t flat_dim() const { return flat_dim_; }

    std::vector<std::string> head_names() const {
        if (cfg_.mode == StreamMode::dual) return {"head_max", "head_sum"};
        return {"head"};
    }

    // Class scores for a batch: in dual mode the sum of both head softmax
    // vectors (each row sums to 2), otherwise a single softmax.
    nn::Tensor<T> output_scores(const nn::Tensor<T>& rgb, const nn::Tensor<T>& desc) const {
        if (cfg_.mode != StreamMode::dual) {
            StreamCache sc = run_stream(single_input(rgb, desc));
            HeadCache hc = run_head("head", sc.f);
            return nn::softmax(hc.logits);
        }
        StreamCache s1 = run_stream(rgb);
        StreamCache s2 = run_stream(desc);
        nn::Tensor<T> zmax;
        nn::Tensor<uint8_t> mask;
        nn::fuse_max_forward(s1.f, s2.f, zmax, mask);
        nn::Tensor<T> zsum = nn::fuse_sum_forward(s1.f, s2.f);
        HeadCache hmax = run_head("head_max", zmax);
        HeadCache hsum = run_head("head_sum", zsum);
        nn::Tensor<T> o = nn::softmax(hmax.logits);
        nn::Tensor<T> osum = nn::softmax(hsum.logits);
        for (size_t i = 0; i < o.v.size(); ++i) o.v[i] += osum.v[i];
        return o;
    }

    // Forward plus backward for one batch; gradients accumulate into the
    // parameter store (caller zeroes them). Returns the batch loss: the sum
    // of both head cross-entropies in dual mode, one term otherwise.
    double compute_gradients(const nn::Tensor<T>& rgb, const nn::Tensor<T>& desc,
                             const nn::Tensor<T>& onehot) {
        if (cfg_.mode != StreamMode::dual) {
            StreamCache sc = run_stream(single_input(rgb, desc));
            HeadCache hc = run_head("head", sc.f);
            auto L = nn::softmax_xent(hc.logits, onehot);
            nn::Tensor<T> df = head_backward("head", hc, L.dlogits);
            stream_backward(sc, df);
            return L.loss;
        }
        StreamCache s1 = run_stream(rgb);
        StreamCache s2 = run_stream(desc);
        nn::Tensor<T> zmax;
        nn::Tensor<uint8_t> mask;
        nn::fuse_max_forward(s1.f, s2.f, zmax, mask);
        nn::Tensor<T> zsum = nn::fuse_sum_forward(s1.f, s2.f);
        HeadCache hmax = run_head("head_max", zmax);
        HeadCache hsum = run_head("head_sum", zsum);
        auto lmax = nn::softmax_xent(hmax.logits, onehot);
        auto lsum = nn::softmax_xent(hsum.logits, onehot);

        nn::Tensor<T> dzmax = head_backward("head_max", hmax, lmax.dlogits);
        nn::Tensor<T> dzsum = head_backward("head_sum", hsum, lsum.dlogits);
        nn::Tensor<T> df1(s1.f.shape), df2(s2.f.shape);
        nn::fuse_max_backward(mask, dzmax, df1, df2);
        for (size_t i = 0; i < df1.v.size(); ++i) {
            df1.v[i] += dzsum.v[i];
            df2.v[i] += dzsum.v[i];
        }
        stream_backward(s1, df1);
        stream_backward(s2, df2);
        return lmax.loss + lsum.loss;
    }

private:
    struct StreamCache {
        nn::Tensor<T> input;
        std::vector<nn::Tensor<T>> pre, act, pooled;
        std::vector<nn::Tensor<int64_t>> idx;
        nn::Tensor<T> flat, proj_pre, f;
    };
    struct HeadCache {
        nn::Tensor<T> z, h1_pre, h1, h2_pre, h2, logits;
    };

    void validate_config() const {
        if (cfg_.num_classes < 2) throw std::invalid_argument("network: need at least 2 classes");
        if (cfg_.convs.empty()) throw std::invalid_argument("network: empty trunk");
        if (cfg_.proj_dim < 1 || cfg_.head_hidden < 1 || cfg_.input_size < 1)
            throw std::invalid_argument("network: bad dimensions");
        int s = cfg_.input_size;
        for (const auto& spec : cfg_.convs) {
            if (spec.out_channels < 1) throw std::invalid_argument("network: bad channel count");
            if (spec.pool_after) {
                if (s % 2 || s < 2)
                    throw std::invalid_argument("network: spatial size not divisible by pools");
                s /= 2;
            }
        }
    }

    const nn::Tensor<T>& single_input(const nn::Tensor<T>& rgb, const nn::Tensor<T>& desc) const {
        return cfg_.mode == StreamMode::rgb_only ? rgb : desc;
    }

    StreamCache run_stream(const nn::Tensor<T>& x) const {
        if (x.shape.size() != 4 || x.shape[1] != 3 || x.shape[2] != cfg_.input_size ||
            x.shape[3] != cfg_.input_size)
            throw std::invalid_argument("network: bad input shape");
        StreamCache c;
        c.input = x;
        size_t L = cfg_.convs.size();
        c.pre.resize(L);
        c.act.resize(L);
        c.pooled.resize(L);
        c.idx.resize(L);
        const nn::Tensor<T>* cur = &c.input;
        for (size_t i = 0; i < L; ++i) {
            std::string base = "conv" + std::to_string(i + 1);
            c.pre[i] = nn::conv2d_forward(*cur, params_.get(base + ".w"), params_.get(base + ".b"));
            c.act[i] = nn::relu_forward(c.pre[i]);
            if (cfg_.convs[i].pool_after) {
                nn::maxpool2_forward(c.act[i], c.pooled[i], c.idx[i]);
                cur = &c.pooled[i];
            } else {
                cur = &c.act[i];
            }
        }
        c.flat = *cur;
        c.flat.shape = {cur->shape[0], flat_dim_};
        c.proj_pre = nn::fc_forward(c.flat, params_.get("proj.w"), params_.get("proj.b"));
        c.f = nn::relu_forward(c.proj_pre);
        return c;
    }

    // Accumulates trunk parameter gradients from one stream. The input
    // gradient is not needed and is dropped at the first stage.
    void stream_backward(StreamCache& c, const nn::Tensor<T>& df) {
        nn::Tensor<T> dpre = nn::relu_backward(c.proj_pre, df);
        nn::Tensor<T> dflat;
        nn::fc_backward(c.flat, params_.get("proj.w"), dpre, &dflat, params_.get("proj.w").g,
                        params_.get("proj.b").g);
        size_t L = cfg_.convs.size();
        const nn::Tensor<T>* last =
            cfg_.convs[L - 1].pool_after ? &c.pooled[L - 1] : &c.act[L - 1];
        nn::Tensor<T> dstage = dflat;
        dstage.shape = last->shape;
        for (size_t ii = L; ii-- > 0;) {
            nn::Tensor<T> dact;
            if (cfg_.convs[ii].pool_after)
                dact = nn::maxpool2_backward(c.idx[ii], dstage, c.act[ii].shape);
            else
                dact = std::move(dstage);
            nn::Tensor<T> dconv = nn::relu_backward(c.pre[ii], dact);
            const nn::Tensor<T>& in =
                ii == 0 ? c.input
                        : (cfg_.convs[ii - 1].pool_after ? c.pooled[ii - 1] : c.act[ii - 1]);
            std::string base = "conv" + std::to_string(ii + 1);
            nn::Tensor<T>* dx = nullptr;
            nn::Tensor<T> din;
            if (ii > 0) {
                din = nn::Tensor<T>(in.shape);
                dx = &din;
            }
            nn::conv2d_backward(in, params_.get(base + ".w"), dconv, dx,
                                params_.get(base + ".w").g, params_.get(base + ".b").g);
            if (ii > 0) dstage = std::move(din);
        }
    }

    HeadCache run_head(const std::string& prefix, const nn::Tensor<T>& z) const {
        HeadCache h;
        h.z = z;
        h.h1_pre = nn::fc_forward(z, params_.get(prefix + ".fc1.w"), params_.get(prefix + ".fc1.b"));
        h.h1 = nn::relu_forward(h.h1_pre);
        h.h2_pre =
            nn::fc_forward(h.h1, params_.get(prefix + ".fc2.w"), params_.get(prefix + ".fc2.b"));
        h.h2 = nn::relu_forward(h.h2_pre);
        h.logits =
            nn::fc_forward(h.h2, params_.get(prefix + ".out.w"), params_.get(prefix + ".out.b"));
        return h;
    }

    nn::Tensor<T> head_backward(const std::string& prefix, HeadCache& h,
                                const nn::Tensor<T>& dlogits) {
        nn::Tensor<T> dh2;
        nn::fc_backward(h.h2, params_.get(prefix + ".out.w"), dlogits, &dh2,
                        params_.get(prefix + ".out.w").g, params_.get(prefix + ".out.b").g);
        nn::Tensor<T> dh2pre = nn::relu_backward(h.h2_pre, dh2);
        nn::Tensor<T> dh1;
        nn::fc_backward(h.h1, params_.get(prefix + ".fc2.w"), dh2pre, &dh1,
                        params_.get(prefix + ".fc2.w").g, params_.get(prefix + ".fc2.b").g);
        nn::Tensor<T> dh1pre = nn::relu_backward(h.h1_pre, dh1);
        nn::Tensor<T> dz;
        nn::fc_backward(h.z, params_.get(prefix + ".fc1.w"), dh1pre, &dz,
                        params_.get(prefix + ".fc1.w").g, params_.get(prefix + ".fc1.b").g);
        return dz;
    }

    NetworkConfig cfg_;
    nn::ParamStore<T> params_;
    int64_t flat_dim_ = 0;
};

// One labeled training pair: the RGB crop and its descriptor rendering,
// both square images matching the network input size.
struct TrainExample {
    img::ColorImage rgb;
    img::ColorImage descriptor;
    int label = 0;
    Side side = Side::left;
};

struct EpochLog {
    int epoch;
    double lr;
    double loss;
};

// Packs images into an [N, 3, S, S] tensor with intensities scaled to [0,1].
template <typename T>
nn::Tensor<T> images_to_tensor(const std::vector<const img::ColorImage*>& images, int size) {
    nn::Tensor<T> t({static_cast<int64_t>(images.size()), 3, size, size});
    for (size_t n = 0; n < images.size(); ++n) {
        const img::ColorImage& im = *images[n];
        if (im.height != size || im.width != size)
            throw std::invalid_argument("images_to_tensor: wrong image size");
        T* base = t.data() + static_cast<int64_t>(n) * 3 * size * size;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    base[(static_cast<int64_t>(c) * size + y) * size + x] =
                        static_cast<T>(im.at(y, x, c) / 255.0);
    }
    return t;
}

// Minibatch training with a seeded shuffle per epoch. All examples must
// carry the side the network was configured for; mixing sides is an error.
// Returns one log entry per epoch with the scheduled rate and the mean
// sample loss.
template <typename T>
std::vector<EpochLog> train(DualStreamNet<T>& net, const std::vector<TrainExample>& examples,
                            const nn::OptimizerConfig& cfg, uint64_t seed,
                            std::ostream* log = nullptr) {
    if (examples.empty()) throw std::invalid_argument("train: no examples");
    if (cfg.batch_size < 1 || cfg.epochs < 0) throw std::invalid_argument("train: bad config");
    const auto& nc = net.config();
    for (const auto& ex : examples) {
        if (ex.side != nc.side) throw std::invalid_argument("train: example side mismatch");
        if (ex.label < 0 || ex.label >= nc.num_classes)
            throw std::invalid_argument("train: label out of range");
    }

    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<EpochLog> logs;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, static_cast<uint64_t>(epoch), 0x5a));
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch_size)) {
            size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(cfg.batch_size));
            size_t n = b1 - b0;
            std::vector<const img::ColorImage*> rgb(n), desc(n);
            nn::Tensor<T> onehot({static_cast<int64_t>(n), nc.num_classes});
            for (size_t i = 0; i < n; ++i) {
                const TrainExample& ex = examples[order[b0 + i]];
                rgb[i] = &ex.rgb;
                desc[i] = &ex.descriptor;
                onehot.data()[static_cast<int64_t>(i) * nc.num_classes + ex.label] = T(1);
            }
            auto xr = images_to_tensor<T>(rgb, nc.input_size);
            auto xd = images_to_tensor<T>(desc, nc.input_size);
            net.params().zero_grads();
            double loss = net.compute_gradients(xr, xd, onehot);
            nn::adam_step(net.params(), cfg, epoch);
            epoch_loss += loss * static_cast<double>(n);
        }
        epoch_loss /= static_cast<double>(examples.size());
        double lr = nn::learning_rate_for_epoch(cfg, epoch);
        logs.push_back({epoch, lr, epoch_loss});
        if (log)
            (*log) << "epoch " << epoch << " lr " << lr << " loss " << epoch_loss << "\n";
    }
    return logs;
}

// Score vector for one image pair (the model's identity output used by the
// matcher). Dual mode: softmax(max head) + softmax(sum head).
template <typename T>
std::vector<double> embed(const DualStreamNet<T>& net, const img::ColorImage& rgb,
                          const img::ColorImage& desc) {
    auto xr = images_to_tensor<T>({&rgb}, net.config().input_size);
    auto xd = images_to_tensor<T>({&desc}, net.config().input_size);
    nn::Tensor<T> o = net.output_scores(xr, xd);
    std::vector<double> out(o.v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(o.v[i]);
    return out;
}

// Model metadata written next to the checkpoint.
struct ModelMeta {
    std::vector<std::string> class_labels;
    uint64_t palette_hash = 0;
    uint64_t train_seed = 0;
    nn::OptimizerConfig optimizer;
};

template <typename T>
void save_model(const DualStreamNet<T>& net, const ModelMeta& meta, const std::string& path) {
    nn::save_checkpoint(net.params(), path);
    const NetworkConfig& c = net.config();
    nlohmann::json j;
    j["format_version"] = 1;
    j["side"] = side_name(c.side);
    j["mode"] = mode_name(c.mode);
    j["num_classes"] = c.num_classes;
    j["input_size"] = c.input_size;
    j["proj_dim"] = c.proj_dim;
    j["head_hidden"] = c.head_hidden;
    nlohmann::json convs = nlohmann::json::array();
    for (const auto& s : c.convs)
        convs.push_back({{"channels", s.out_channels}, {"pool_after", s.pool_after}});
    j["convs"] = convs;
    j["class_labels"] = meta.class_labels;
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(meta.palette_hash));
    j["palette_hash"] = std::string(hex);
    j["train_seed"] = meta.train_seed;
    j["optimizer"] = {{"initial_lr", meta.optimizer.initial_lr},
                      {"lr_decay_factor", meta.optimizer.lr_decay_factor},
                      {"min_lr", meta.optimizer.min_lr},
                      {"weight_decay", meta.optimizer.weight_decay},
                      {"beta1", meta.optimizer.beta1},
                      {"beta2", meta.optimizer.beta2},
                      {"epsilon", meta.optimizer.epsilon},
                      {"batch_size", meta.optimizer.batch_size},
                      {"epochs", meta.optimizer.epochs}};
    std::ofstream out(path + ".json");
    if (!out) throw std::runtime_error(path + ".json: cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error(path + ".json: write failed");
}

template <typename T>
DualStreamNet<T> load_model(const std::string& path, ModelMeta* meta_out = nullptr) {
    std::ifstream in(path + ".json");
    if (!in) throw std::runtime_error(path + ".json: cannot open");
    nlohmann::json j = nlohmann::json::parse(in);
    NetworkConfig c;
    c.side = side_from_name(j.at("side").get<std::string>());
    c.mode = mode_from_name(j.at("mode").get<std::string>());
    c.num_classes = j.at("num_classes").get<int>();
    c.input_size = j.at("input_size").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.head_hidden = j.at("head_hidden").get<int>();
    c.convs.clear();
    for (const auto& s : j.at("convs"))
        c.convs.push_back({s.at("channels").get<int>(), s.at("pool_after").get<bool>()});
    DualStreamNet<T> net(c, 0, true);
    nn::load_checkpoint(net.params(), path);
    if (meta_out) {
        meta_out->class_labels = j.at("class_labels").get<std::vector<std::string>>();
        meta_out->palette_hash =
            std::stoull(j.at("palette_hash").get<std::string>(), nullptr, 16);
        meta_out->train_seed = j.at("train_seed").get<uint64_t>();
        auto& o = j.at("optimizer");
        meta_out->optimizer.initial_lr = o.at("initial_lr").get<double>();
        meta_out->optimizer.lr_decay_factor = o.at("lr_decay_factor").get<double>();
        meta_out->optimizer.min_lr = o.at("min_lr").get<double>();
        meta_out->optimizer.weight_decay = o.at("weight_decay").get<double>();
        meta_out->optimizer.beta1 = o.at("beta1").get<double>();
        meta_out->optimizer.beta2 = o.at("beta2").get<double>();
        meta_out->optimizer.epsilon = o.at("epsilon").get<double>();
        meta_out->optimizer.batch_size = o.at("batch_size").get<int>();
        meta_out->optimizer.epochs = o.at("epochs").get<int>();
    }
    return net;
}

#ifdef OCLBCP_TRAIN_FLOAT64
using train_real_t = double;
#else
using train_real_t = float;
#endif

}  // namespace oclbcp::net
