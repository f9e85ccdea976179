#include "facecloak/toy_backend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "facecloak/container.hpp"
#include "facecloak/error.hpp"
#include "facecloak/rng.hpp"
#include "facecloak/sha256.hpp"

namespace facecloak {

namespace {

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;
constexpr std::array<int, 3> kWidths = {16, 32, 64};
constexpr int kPoolChannels = 64;

int conv_out_dim(int in_dim) { return (in_dim + 2 * kPad - kKernel) / kStride + 1; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

struct LayerShape {
    int h;
    int w;
    int c;
    std::size_t size() const { return static_cast<std::size_t>(h) * w * c; }
};

// Direct 3×3 stride-2 convolution, zero padding, HWC activations,
// weights [out][ky][kx][in].
void conv_forward(const std::vector<double>& in, LayerShape in_shape, const ConvParams& p,
                  std::vector<double>& out, LayerShape out_shape) {
    for (int yo = 0; yo < out_shape.h; ++yo) {
        for (int xo = 0; xo < out_shape.w; ++xo) {
            double* out_px = &out[(static_cast<std::size_t>(yo) * out_shape.w + xo) * out_shape.c];
            for (int o = 0; o < p.out_channels; ++o) out_px[o] = p.bias[o];
            for (int ky = 0; ky < kKernel; ++ky) {
                const int yi = yo * kStride + ky - kPad;
                if (yi < 0 || yi >= in_shape.h) continue;
                for (int kx = 0; kx < kKernel; ++kx) {
                    const int xi = xo * kStride + kx - kPad;
                    if (xi < 0 || xi >= in_shape.w) continue;
                    const double* in_px =
                        &in[(static_cast<std::size_t>(yi) * in_shape.w + xi) * in_shape.c];
                    for (int o = 0; o < p.out_channels; ++o) {
                        const double* w =
                            &p.weights[((static_cast<std::size_t>(o) * kKernel + ky) * kKernel +
                                        kx) *
                                       p.in_channels];
                        double acc = 0.0;
                        for (int ic = 0; ic < p.in_channels; ++ic) acc += in_px[ic] * w[ic];
                        out_px[o] += acc;
                    }
                }
            }
        }
    }
}

// dOut is the gradient at the conv output; fills dIn (if non-null) and
// accumulates parameter gradients (if non-null).
void conv_backward(const std::vector<double>& in, LayerShape in_shape, const ConvParams& p,
                   const std::vector<double>& d_out, LayerShape out_shape,
                   std::vector<double>* d_in, ConvParams* d_params) {
    if (d_in) std::fill(d_in->begin(), d_in->end(), 0.0);
    for (int yo = 0; yo < out_shape.h; ++yo) {
        for (int xo = 0; xo < out_shape.w; ++xo) {
            const double* g_px =
                &d_out[(static_cast<std::size_t>(yo) * out_shape.w + xo) * out_shape.c];
            if (d_params) {
                for (int o = 0; o < p.out_channels; ++o) d_params->bias[o] += g_px[o];
            }
            for (int ky = 0; ky < kKernel; ++ky) {
                const int yi = yo * kStride + ky - kPad;
                if (yi < 0 || yi >= in_shape.h) continue;
                for (int kx = 0; kx < kKernel; ++kx) {
                    const int xi = xo * kStride + kx - kPad;
                    if (xi < 0 || xi >= in_shape.w) continue;
                    const std::size_t in_off =
                        (static_cast<std::size_t>(yi) * in_shape.w + xi) * in_shape.c;
                    for (int o = 0; o < p.out_channels; ++o) {
                        const double g = g_px[o];
                        if (g == 0.0) continue;
                        const std::size_t w_off =
                            ((static_cast<std::size_t>(o) * kKernel + ky) * kKernel + kx) *
                            p.in_channels;
                        if (d_in) {
                            for (int ic = 0; ic < p.in_channels; ++ic) {
                                (*d_in)[in_off + ic] += g * p.weights[w_off + ic];
                            }
                        }
                        if (d_params) {
                            for (int ic = 0; ic < p.in_channels; ++ic) {
                                d_params->weights[w_off + ic] += g * in[in_off + ic];
                            }
                        }
                    }
                }
            }
        }
    }
}

struct Trace {
    std::array<LayerShape, 4> shapes;  // input + three conv outputs
    std::vector<double> input;
    std::array<std::vector<double>, 3> pre;  // pre-activation per conv
    std::array<std::vector<double>, 3> act;  // SiLU output per conv
    std::vector<double> pooled;              // kPoolChannels
    std::vector<double> feat;                // fc output, pre-normalization
    double feat_norm = 0.0;
    std::vector<double> embedding;
};

Trace run_forward(const ToyBackendWeights& w, const std::vector<double>& input) {
    Trace t;
    t.shapes[0] = {w.input_height, w.input_width, 3};
    for (int l = 0; l < 3; ++l) {
        t.shapes[l + 1] = {conv_out_dim(t.shapes[l].h), conv_out_dim(t.shapes[l].w), kWidths[l]};
    }
    t.input = input;
    const std::vector<double>* current = &t.input;
    for (int l = 0; l < 3; ++l) {
        t.pre[l].assign(t.shapes[l + 1].size(), 0.0);
        conv_forward(*current, t.shapes[l], w.convs[l], t.pre[l], t.shapes[l + 1]);
        t.act[l].resize(t.pre[l].size());
        for (std::size_t i = 0; i < t.pre[l].size(); ++i) t.act[l][i] = silu(t.pre[l][i]);
        current = &t.act[l];
    }

    const LayerShape& last = t.shapes[3];
    t.pooled.assign(kPoolChannels, 0.0);
    const double inv_area = 1.0 / (static_cast<double>(last.h) * last.w);
    for (int y = 0; y < last.h; ++y) {
        for (int x = 0; x < last.w; ++x) {
            const double* px = &t.act[2][(static_cast<std::size_t>(y) * last.w + x) * last.c];
            for (int c = 0; c < last.c; ++c) t.pooled[c] += px[c];
        }
    }
    for (double& v : t.pooled) v *= inv_area;

    t.feat.assign(w.embedding_dim, 0.0);
    for (int d = 0; d < w.embedding_dim; ++d) {
        double acc = w.fc_bias[d];
        const double* row = &w.fc_weights[static_cast<std::size_t>(d) * kPoolChannels];
        for (int c = 0; c < kPoolChannels; ++c) acc += row[c] * t.pooled[c];
        t.feat[d] = acc;
    }

    double norm_sq = 0.0;
    for (double v : t.feat) {
        if (!std::isfinite(v)) {
            raise(ErrorKind::BackendFailure, "backends", "non-finite activation in toy backend");
        }
        norm_sq += v * v;
    }
    t.feat_norm = std::sqrt(norm_sq);
    if (t.feat_norm < 1e-9) {
        raise(ErrorKind::BackendFailure, "backends", "degenerate (near-zero) embedding feature");
    }
    t.embedding.resize(t.feat.size());
    for (std::size_t i = 0; i < t.feat.size(); ++i) t.embedding[i] = t.feat[i] / t.feat_norm;
    return t;
}

struct ParamGrads {
    std::array<ConvParams, 3> convs;
    std::vector<double> fc_weights;
    std::vector<double> fc_bias;
};

ParamGrads zero_grads(const ToyBackendWeights& w) {
    ParamGrads g;
    for (int l = 0; l < 3; ++l) {
        g.convs[l].in_channels = w.convs[l].in_channels;
        g.convs[l].out_channels = w.convs[l].out_channels;
        g.convs[l].weights.assign(w.convs[l].weights.size(), 0.0);
        g.convs[l].bias.assign(w.convs[l].bias.size(), 0.0);
    }
    g.fc_weights.assign(w.fc_weights.size(), 0.0);
    g.fc_bias.assign(w.fc_bias.size(), 0.0);
    return g;
}

// Backward from d(embedding) to the input plane; optionally accumulates
// parameter gradients for training.
std::vector<double> run_backward(const ToyBackendWeights& w, const Trace& t,
                                 const std::vector<double>& d_embedding, bool need_input_grad,
                                 ParamGrads* grads) {
    // Through L2 normalization: d_feat = (g − ê⟨ê, g⟩)/‖feat‖.
    double dot = 0.0;
    for (std::size_t i = 0; i < d_embedding.size(); ++i) dot += t.embedding[i] * d_embedding[i];
    std::vector<double> d_feat(t.feat.size());
    for (std::size_t i = 0; i < d_feat.size(); ++i) {
        d_feat[i] = (d_embedding[i] - t.embedding[i] * dot) / t.feat_norm;
    }

    std::vector<double> d_pooled(kPoolChannels, 0.0);
    for (int d = 0; d < w.embedding_dim; ++d) {
        const double g = d_feat[d];
        const double* row = &w.fc_weights[static_cast<std::size_t>(d) * kPoolChannels];
        for (int c = 0; c < kPoolChannels; ++c) d_pooled[c] += g * row[c];
        if (grads) {
            double* grow = &grads->fc_weights[static_cast<std::size_t>(d) * kPoolChannels];
            for (int c = 0; c < kPoolChannels; ++c) grow[c] += g * t.pooled[c];
            grads->fc_bias[d] += g;
        }
    }

    const LayerShape& last = t.shapes[3];
    const double inv_area = 1.0 / (static_cast<double>(last.h) * last.w);
    std::vector<double> d_act(last.size());
    for (int y = 0; y < last.h; ++y) {
        for (int x = 0; x < last.w; ++x) {
            double* px = &d_act[(static_cast<std::size_t>(y) * last.w + x) * last.c];
            for (int c = 0; c < last.c; ++c) px[c] = d_pooled[c] * inv_area;
        }
    }

    std::vector<double> d_pre;
    std::vector<double> d_prev;
    for (int l = 2; l >= 0; --l) {
        d_pre.resize(d_act.size());
        for (std::size_t i = 0; i < d_act.size(); ++i) {
            d_pre[i] = d_act[i] * silu_grad(t.pre[l][i]);
        }
        const std::vector<double>& layer_in = (l == 0) ? t.input : t.act[l - 1];
        const bool want_input = (l > 0) || need_input_grad;
        d_prev.assign(t.shapes[l].size(), 0.0);
        conv_backward(layer_in, t.shapes[l], w.convs[l], d_pre, t.shapes[l + 1],
                      want_input ? &d_prev : nullptr, grads ? &grads->convs[l] : nullptr);
        d_act = d_prev;
    }
    return d_act;  // gradient at the input plane
}

ConvParams init_conv(int in_c, int out_c, Rng& rng) {
    ConvParams p;
    p.in_channels = in_c;
    p.out_channels = out_c;
    p.weights.resize(static_cast<std::size_t>(out_c) * kKernel * kKernel * in_c);
    p.bias.assign(out_c, 0.0);
    const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_c) * kKernel * kKernel));
    for (double& v : p.weights) v = rng.normal() * std_dev;
    return p;
}

}  // namespace

std::size_t ToyBackendWeights::parameter_count() const {
    std::size_t n = 0;
    for (const ConvParams& c : convs) n += c.weights.size() + c.bias.size();
    return n + fc_weights.size() + fc_bias.size();
}

ToyBackendWeights random_toy_weights(int input_height, int input_width, std::uint64_t seed,
                                     int embedding_dim, std::string backend_id) {
    if (input_height < ImagePlane::kMinSide || input_width < ImagePlane::kMinSide) {
        raise(ErrorKind::OutOfRange, "backends", "toy backend input below minimum size");
    }
    if (embedding_dim < 2) {
        raise(ErrorKind::OutOfRange, "backends", "embedding dimension must be at least 2");
    }
    Rng rng(seed);
    ToyBackendWeights w;
    w.backend_id = std::move(backend_id);
    w.input_height = input_height;
    w.input_width = input_width;
    w.embedding_dim = embedding_dim;
    w.seed = seed;
    int in_c = 3;
    for (int l = 0; l < 3; ++l) {
        w.convs[l] = init_conv(in_c, kWidths[l], rng);
        in_c = kWidths[l];
    }
    w.fc_weights.resize(static_cast<std::size_t>(embedding_dim) * kPoolChannels);
    const double fc_std = std::sqrt(2.0 / kPoolChannels);
    for (double& v : w.fc_weights) v = rng.normal() * fc_std;
    w.fc_bias.assign(embedding_dim, 0.0);
    return w;
}

ToyBackend::ToyBackend(ToyBackendWeights weights) : weights_(std::move(weights)) {
    descriptor_ = BackendDescriptor{weights_.backend_id, weights_.input_height,
                                    weights_.input_width, weights_.embedding_dim, true};
}

Embedding ToyBackend::embed(const ImagePlane& image) const {
    check_input_shape(image);
    Trace t = run_forward(weights_, image.data());
    return Embedding(std::move(t.embedding));
}

std::vector<double> ToyBackend::input_gradient(const ImagePlane& image,
                                               const EmbeddingObjective& objective) const {
    check_input_shape(image);
    const Trace t = run_forward(weights_, image.data());
    const std::vector<double> d_embedding = objective.gradient(Embedding(t.embedding));
    if (d_embedding.size() != static_cast<std::size_t>(weights_.embedding_dim)) {
        raise(ErrorKind::ShapeMismatch, "backends", "objective gradient has wrong dimension");
    }
    return run_backward(weights_, t, d_embedding, /*need_input_grad=*/true, nullptr);
}

namespace {

// Adam state mirrors the flat parameter layout.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int step = 0;
};

void adam_update(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
                 std::size_t offset, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, state.step);
    const double bc2 = 1.0 - std::pow(b2, state.step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = b1 * m + (1.0 - b1) * grads[i];
        v = b2 * v + (1.0 - b2) * grads[i] * grads[i];
        params[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
}

struct GroupedDataset {
    std::vector<IdentityLabel> labels;                 // first-appearance order
    std::vector<std::vector<const ImagePlane*>> images;  // per label, insertion order
};

GroupedDataset group_by_label(const std::vector<LabeledImage>& dataset) {
    GroupedDataset g;
    std::map<std::string, std::size_t> index;
    for (const LabeledImage& item : dataset) {
        auto [it, inserted] = index.emplace(item.label.value, g.labels.size());
        if (inserted) {
            g.labels.push_back(item.label);
            g.images.emplace_back();
        }
        g.images[it->second].push_back(&item.image);
    }
    return g;
}

}  // namespace

ToyBackendWeights train_toy_backend(const std::vector<LabeledImage>& dataset,
                                    const ToyTrainConfig& config) {
    if (dataset.empty()) {
        raise(ErrorKind::DatasetTooSmall, "backends", "empty training dataset");
    }
    const GroupedDataset grouped = group_by_label(dataset);
    const int n_classes = static_cast<int>(grouped.labels.size());
    if (n_classes < 10) {
        raise(ErrorKind::DatasetTooSmall, "backends",
              "need at least 10 identities, got " + std::to_string(n_classes));
    }
    for (std::size_t i = 0; i < grouped.images.size(); ++i) {
        if (grouped.images[i].size() < 5) {
            raise(ErrorKind::DatasetTooSmall, "backends",
                  "identity '" + grouped.labels[i].value + "' has fewer than 5 images");
        }
        if (static_cast<int>(grouped.images[i].size()) <= config.holdout_per_identity) {
            raise(ErrorKind::DatasetTooSmall, "backends",
                  "identity '" + grouped.labels[i].value + "' cannot spare a held-out split");
        }
    }
    const int height = dataset.front().image.height();
    const int width = dataset.front().image.width();
    for (const LabeledImage& item : dataset) {
        if (item.image.height() != height || item.image.width() != width) {
            raise(ErrorKind::ShapeMismatch, "backends", "training images disagree on shape");
        }
    }

    // Train/holdout split: the last holdout_per_identity images per identity
    // are reserved for the accuracy gate.
    struct Sample {
        const ImagePlane* image;
        int class_index;
    };
    std::vector<Sample> train, holdout;
    for (std::size_t cls = 0; cls < grouped.images.size(); ++cls) {
        const auto& imgs = grouped.images[cls];
        const std::size_t n_train = imgs.size() - config.holdout_per_identity;
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            (i < n_train ? train : holdout).push_back({imgs[i], static_cast<int>(cls)});
        }
    }

    ToyBackendWeights weights =
        random_toy_weights(height, width, config.seed, config.embedding_dim, config.backend_id);
    {
        Sha256 digest;
        for (const LabeledImage& item : dataset) {
            digest.update(item.label.value.data(), item.label.value.size());
            const auto payload = item.image.payload_f32le();
            digest.update(payload.data(), payload.size());
        }
        weights.dataset_digest = digest.hex_digest();
    }
    weights.epochs = config.epochs;

    // Normalized-softmax classifier head, discarded after training.
    Rng head_rng = Rng(config.seed).fork(0x5ead);
    std::vector<double> class_weights(static_cast<std::size_t>(n_classes) * config.embedding_dim);
    const double head_std = std::sqrt(2.0 / config.embedding_dim);
    for (double& v : class_weights) v = head_rng.normal() * head_std;

    // Flat Adam state across every parameter tensor.
    std::vector<std::vector<double>*> param_tensors = {
        &weights.convs[0].weights, &weights.convs[0].bias, &weights.convs[1].weights,
        &weights.convs[1].bias,    &weights.convs[2].weights, &weights.convs[2].bias,
        &weights.fc_weights,       &weights.fc_bias,          &class_weights};
    std::size_t total_params = 0;
    for (auto* t : param_tensors) total_params += t->size();
    AdamState adam;
    adam.m.assign(total_params, 0.0);
    adam.v.assign(total_params, 0.0);

    Rng shuffle_rng = Rng(config.seed).fork(0x51ab1e);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    const int dim = config.embedding_dim;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the project Rng; deterministic across platforms.
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            ParamGrads grads = zero_grads(weights);
            std::vector<double> head_grads(class_weights.size(), 0.0);
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            for (std::size_t bi = start; bi < end; ++bi) {
                const Sample& sample = train[order[bi]];
                Trace t = run_forward(weights, sample.image->data());

                // Normalized class weights and logits.
                std::vector<double> logits(n_classes);
                std::vector<double> w_norms(n_classes);
                for (int j = 0; j < n_classes; ++j) {
                    const double* wj = &class_weights[static_cast<std::size_t>(j) * dim];
                    double nsq = 0.0, dot = 0.0;
                    for (int d = 0; d < dim; ++d) nsq += wj[d] * wj[d];
                    w_norms[j] = std::max(std::sqrt(nsq), 1e-12);
                    for (int d = 0; d < dim; ++d) dot += wj[d] * t.embedding[d];
                    logits[j] = config.softmax_scale * dot / w_norms[j];
                }
                const double max_logit = *std::max_element(logits.begin(), logits.end());
                double z = 0.0;
                for (double& l : logits) {
                    l = std::exp(l - max_logit);
                    z += l;
                }
                std::vector<double> d_embedding(dim, 0.0);
                for (int j = 0; j < n_classes; ++j) {
                    const double p = logits[j] / z;
                    const double dlogit =
                        (p - (j == sample.class_index ? 1.0 : 0.0)) * inv_batch;
                    const double* wj = &class_weights[static_cast<std::size_t>(j) * dim];
                    double w_dot_e = 0.0;
                    for (int d = 0; d < dim; ++d) w_dot_e += wj[d] * t.embedding[d];
                    const double inv_norm = 1.0 / w_norms[j];
                    double* gj = &head_grads[static_cast<std::size_t>(j) * dim];
                    for (int d = 0; d < dim; ++d) {
                        const double w_hat = wj[d] * inv_norm;
                        d_embedding[d] += config.softmax_scale * dlogit * w_hat;
                        // d logits_j / d w_j through the weight normalization.
                        gj[d] += config.softmax_scale * dlogit * inv_norm *
                                 (t.embedding[d] - w_hat * (w_dot_e * inv_norm));
                    }
                }
                run_backward(weights, t, d_embedding, /*need_input_grad=*/false, &grads);
            }

            adam.step += 1;
            std::size_t offset = 0;
            std::vector<const std::vector<double>*> grad_tensors = {
                &grads.convs[0].weights, &grads.convs[0].bias, &grads.convs[1].weights,
                &grads.convs[1].bias,    &grads.convs[2].weights, &grads.convs[2].bias,
                &grads.fc_weights,       &grads.fc_bias,          &head_grads};
            for (std::size_t ti = 0; ti < param_tensors.size(); ++ti) {
                adam_update(*param_tensors[ti], *grad_tensors[ti], adam, offset,
                            config.learning_rate);
                offset += param_tensors[ti]->size();
            }
        }
    }

    // Held-out Top-1 identification against the training gallery.
    ToyBackend trained(weights);
    std::vector<Embedding> gallery;
    gallery.reserve(train.size());
    for (const Sample& s : train) gallery.push_back(trained.embed(*s.image));
    int correct = 0;
    for (const Sample& probe : holdout) {
        const Embedding e = trained.embed(*probe.image);
        int best = -1;
        double best_dist = 0.0;
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            const double d = embedding_distance(e, gallery[g]);
            if (best < 0 || d < best_dist) {
                best = static_cast<int>(g);
                best_dist = d;
            }
        }
        if (train[static_cast<std::size_t>(best)].class_index == probe.class_index) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
    weights.holdout_top1_accuracy = accuracy;
    if (accuracy < config.accuracy_floor) {
        raise(ErrorKind::TrainingFailure, "backends",
              "held-out Top-1 accuracy " + std::to_string(accuracy) + " below floor " +
                  std::to_string(config.accuracy_floor));
    }
    return weights;
}

void save_toy_weights(const ToyBackendWeights& weights, const std::filesystem::path& path) {
    nlohmann::ordered_json header{
        {"backend_id", weights.backend_id},
        {"input_height", weights.input_height},
        {"input_width", weights.input_width},
        {"embedding_dim", weights.embedding_dim},
        {"conv_widths", {16, 32, 64}},
        {"dtype", "f64le"},
        {"parameter_count", weights.parameter_count()},
        {"dataset_digest", weights.dataset_digest},
        {"epochs", weights.epochs},
        {"seed", weights.seed},
        {"holdout_top1_accuracy", weights.holdout_top1_accuracy},
    };
    std::vector<std::uint8_t> payload;
    for (const ConvParams& c : weights.convs) {
        append_f64le(payload, c.weights);
        append_f64le(payload, c.bias);
    }
    append_f64le(payload, weights.fc_weights);
    append_f64le(payload, weights.fc_bias);
    write_container(path, kToyWeightsMagic, std::move(header), payload);
}

ToyBackendWeights load_toy_weights(const std::filesystem::path& path) {
    const Container c = read_container(path, kToyWeightsMagic);
    const auto& h = c.header;
    ToyBackendWeights w;
    w.backend_id = h.value("backend_id", std::string("toy"));
    w.input_height = h.at("input_height").get<int>();
    w.input_width = h.at("input_width").get<int>();
    w.embedding_dim = h.at("embedding_dim").get<int>();
    w.dataset_digest = h.value("dataset_digest", std::string());
    w.epochs = h.value("epochs", 0);
    w.seed = h.value("seed", std::uint64_t{0});
    w.holdout_top1_accuracy = h.value("holdout_top1_accuracy", 0.0);

    int in_c = 3;
    std::size_t offset = 0;
    auto take = [&](std::size_t count) {
        std::vector<double> v = read_f64le(c.payload, offset, count);
        offset += count * 8;
        return v;
    };
    for (int l = 0; l < 3; ++l) {
        w.convs[l].in_channels = in_c;
        w.convs[l].out_channels = kWidths[l];
        w.convs[l].weights = take(static_cast<std::size_t>(kWidths[l]) * kKernel * kKernel * in_c);
        w.convs[l].bias = take(static_cast<std::size_t>(kWidths[l]));
        in_c = kWidths[l];
    }
    w.fc_weights = take(static_cast<std::size_t>(w.embedding_dim) * kPoolChannels);
    w.fc_bias = take(static_cast<std::size_t>(w.embedding_dim));
    if (offset != c.payload.size()) {
        raise(ErrorKind::CorruptPayload, "backends",
              "toy weights payload has trailing bytes: " + path.string());
    }
    for (const ConvParams& conv : w.convs) {
        for (double v : conv.weights) {
            if (!std::isfinite(v)) {
                raise(ErrorKind::InvariantViolation, "backends", "non-finite weight in " + path.string());
            }
        }
    }
    return w;
}

}  // namespace facecloak
