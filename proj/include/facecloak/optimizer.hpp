#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "facecloak/backend.hpp"
#include "facecloak/cloak.hpp"
#include "facecloak/focusing.hpp"
#include "facecloak/synthgen.hpp"
#include "facecloak/types.hpp"

namespace facecloak {

// Distractor gallery embeddings used for anchor selection; identities are
// distinct from the protected user by construction.
struct AnchorPool {
    std::vector<std::pair<IdentityLabel, Embedding>> entries;
    std::string source;

    void validate() const;  // ≥ 2 entries, ≥ 2 distinct labels
};

// near = argmin ‖e − seed‖₂, far = argmax; ties break to the lowest index.
AnchorPair select_anchors(const Embedding& seed_embedding, const AnchorPool& pool);

// (1/n) Σᵢ [‖eᵢ − e(G−)‖₂ − ‖eᵢ − e(G+)‖₂]
double contrastive_loss(const std::vector<Embedding>& perturbed_embeddings,
                        const AnchorPair& anchors);

// Element-wise clamp of the attention-weighted perturbation into
// [−budget, +budget].
std::vector<double> project(const std::vector<double>& delta_weighted, const BudgetMap& budget);

struct IterationStats {
    int iteration = 0;
    double loss = 0.0;
    double max_abs_delta = 0.0;
};

struct OptimizerConfig {
    double eps = 8.0 / 255.0;
    double eps_boosted = 32.0 / 255.0;
    double step = 2.0 / 255.0;
    int iterations = 10;
    int n_variants = 8;
    bool use_sticker = true;
    bool use_highpass = true;
    bool use_attention = true;
    AttentionConfig attention;
    HighPassConfig highpass;
    StickerSpec sticker;
    std::optional<LandmarkSet> landmarks;  // canonical positions when absent
    std::uint64_t rng_seed = 1;
    std::string config_digest;
    std::function<void(const IterationStats&)> on_iteration;

    // Full invariant (0 < step ≤ eps ≤ eps_A ≤ 0.5, iterations ≥ 1); enforced
    // at the CLI boundary. optimize_cloak itself tolerates eps = 0 and
    // degenerates to the zero cloak.
    void validate() const;
};

// Stage-2 core: iterates perturbed-variant formation, contrastive loss,
// sign-gradient perturbation update and attention update; returns the cloak
// holding the final projected δ⊙α.
CloakMask optimize_cloak(const VariantSet& variants, const AnchorPair& anchors,
                         const Backend& backend, const OptimizerConfig& cfg);

// Stage-3: clamp(image + delta, 0, 1); linear in pixel count, no backend.
ImagePlane apply_cloak(const ImagePlane& image, const CloakMask& cloak);

}  // namespace facecloak
