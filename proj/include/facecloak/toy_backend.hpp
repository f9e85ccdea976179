#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "facecloak/backend.hpp"
#include "facecloak/types.hpp"

namespace facecloak {

// Small convolutional embedding network: three stride-2 3×3 conv blocks with
// SiLU (widths 16/32/64), global average pool, linear layer to d. Embeddings
// are taken pre-classifier and L2-normalized; training uses a normalized-
// softmax classification head that is discarded afterwards.
struct ConvParams {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;  // [out][ky][kx][in], 3×3
    std::vector<double> bias;     // [out]

    bool operator==(const ConvParams&) const = default;
};

struct ToyBackendWeights {
    std::string backend_id = "toy";
    int input_height = 32;
    int input_width = 32;
    int embedding_dim = 64;
    std::array<ConvParams, 3> convs;
    std::vector<double> fc_weights;  // [dim][64]
    std::vector<double> fc_bias;     // [dim]

    // Training metadata.
    std::string dataset_digest;
    int epochs = 0;
    std::uint64_t seed = 0;
    double holdout_top1_accuracy = 0.0;

    std::size_t parameter_count() const;
    bool operator==(const ToyBackendWeights&) const = default;
};

ToyBackendWeights random_toy_weights(int input_height, int input_width, std::uint64_t seed,
                                     int embedding_dim = 64, std::string backend_id = "toy");

struct ToyTrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 3e-3;
    double softmax_scale = 16.0;
    int holdout_per_identity = 2;
    double accuracy_floor = 0.90;
    std::uint64_t seed = 1;
    int embedding_dim = 64;
    std::string backend_id = "toy";
};

// Trains on all images except the last holdout_per_identity per identity and
// gates on held-out Top-1 identification accuracy. Deterministic per seed.
ToyBackendWeights train_toy_backend(const std::vector<LabeledImage>& dataset,
                                    const ToyTrainConfig& config);

class ToyBackend : public Backend {
public:
    explicit ToyBackend(ToyBackendWeights weights);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    Embedding embed(const ImagePlane& image) const override;
    std::vector<double> input_gradient(const ImagePlane& image,
                                       const EmbeddingObjective& objective) const override;

    const ToyBackendWeights& weights() const { return weights_; }

private:
    ToyBackendWeights weights_;
    BackendDescriptor descriptor_;
};

void save_toy_weights(const ToyBackendWeights& weights, const std::filesystem::path& path);
ToyBackendWeights load_toy_weights(const std::filesystem::path& path);

}  // namespace facecloak
