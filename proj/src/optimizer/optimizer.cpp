#include "facecloak/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/sha256.hpp"

namespace facecloak {

void AnchorPool::validate() const {
    if (entries.size() < 2) {
        raise(ErrorKind::DatasetTooSmall, "optimizer",
              "anchor pool needs at least 2 entries, got " + std::to_string(entries.size()));
    }
    bool two_labels = false;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (!(entries[i].first == entries[0].first)) {
            two_labels = true;
            break;
        }
    }
    if (!two_labels) {
        raise(ErrorKind::DatasetTooSmall, "optimizer",
              "anchor pool needs at least 2 distinct identities");
    }
}

AnchorPair select_anchors(const Embedding& seed_embedding, const AnchorPool& pool) {
    pool.validate();
    std::size_t near_idx = 0, far_idx = 0;
    double near_dist = 0.0, far_dist = 0.0;
    for (std::size_t i = 0; i < pool.entries.size(); ++i) {
        const double d = embedding_distance(pool.entries[i].second, seed_embedding);
        if (i == 0) {
            near_dist = far_dist = d;
            continue;
        }
        if (d < near_dist) {  // strict: ties keep the lowest index
            near_dist = d;
            near_idx = i;
        }
        if (d > far_dist) {
            far_dist = d;
            far_idx = i;
        }
    }
    return AnchorPair{pool.entries[near_idx].second, pool.entries[far_idx].second,
                      pool.entries[near_idx].first, pool.entries[far_idx].first};
}

double contrastive_loss(const std::vector<Embedding>& perturbed_embeddings,
                        const AnchorPair& anchors) {
    if (perturbed_embeddings.empty()) {
        raise(ErrorKind::InvariantViolation, "optimizer", "contrastive loss over empty set");
    }
    double acc = 0.0;
    for (const Embedding& e : perturbed_embeddings) {
        acc += embedding_distance(e, anchors.far) - embedding_distance(e, anchors.near);
    }
    return acc / static_cast<double>(perturbed_embeddings.size());
}

std::vector<double> project(const std::vector<double>& delta_weighted, const BudgetMap& budget) {
    if (delta_weighted.size() != budget.values().size()) {
        raise(ErrorKind::ShapeMismatch, "optimizer", "perturbation and budget shapes differ");
    }
    std::vector<double> out(delta_weighted.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double bound = budget.values()[i];
        out[i] = std::clamp(delta_weighted[i], -bound, bound);
    }
    return out;
}

void OptimizerConfig::validate() const {
    if (!(step > 0.0) || !(step <= eps) || !(eps <= eps_boosted) || !(eps_boosted <= 0.5)) {
        raise(ErrorKind::ConfigInvalid, "optimizer",
              "budgets must satisfy 0 < step ≤ eps ≤ eps_A ≤ 0.5");
    }
    if (iterations < 1) {
        raise(ErrorKind::ConfigInvalid, "optimizer", "iterations must be at least 1");
    }
    if (n_variants < 1) {
        raise(ErrorKind::ConfigInvalid, "optimizer", "n_variants must be at least 1");
    }
    validate_attention_config(attention);
    validate_highpass_config(highpass);
    validate_sticker_spec(sticker);
}

namespace {

// Per-variant term of the contrastive loss and its embedding gradient:
// (ê−far)/‖·‖ − (ê−near)/‖·‖, scaled by 1/n.
class ContrastiveTermObjective : public EmbeddingObjective {
public:
    ContrastiveTermObjective(const AnchorPair& anchors, double weight)
        : anchors_(anchors), weight_(weight) {}

    double value(const Embedding& e) const override {
        return weight_ * (embedding_distance(e, anchors_.far) -
                          embedding_distance(e, anchors_.near));
    }

    std::vector<double> gradient(const Embedding& e) const override {
        const double d_far = std::max(embedding_distance(e, anchors_.far), 1e-12);
        const double d_near = std::max(embedding_distance(e, anchors_.near), 1e-12);
        std::vector<double> g(e.dim());
        for (int i = 0; i < e.dim(); ++i) {
            g[i] = weight_ * ((e[i] - anchors_.far[i]) / d_far -
                              (e[i] - anchors_.near[i]) / d_near);
        }
        return g;
    }

private:
    const AnchorPair& anchors_;
    double weight_;
};

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

CloakMask optimize_cloak(const VariantSet& variants, const AnchorPair& anchors,
                         const Backend& backend, const OptimizerConfig& cfg) {
    variants.validate();
    if (!backend.descriptor().differentiable) {
        raise(ErrorKind::Capability, "optimizer",
              "backend '" + backend.descriptor().backend_id + "' is not differentiable");
    }
    const int height = variants.seed.height();
    const int width = variants.seed.width();
    if (height != backend.descriptor().input_height ||
        width != backend.descriptor().input_width) {
        raise(ErrorKind::ShapeMismatch, "optimizer", "variant shape does not match backend input");
    }
    if (!(cfg.eps >= 0.0) || cfg.eps > cfg.eps_boosted || cfg.iterations < 1 ||
        !(cfg.step > 0.0)) {
        raise(ErrorKind::ConfigInvalid, "optimizer", "invalid optimizer budgets");
    }

    const float eps_f = static_cast<float>(cfg.eps);
    const float eps_boosted_f = static_cast<float>(cfg.eps_boosted);

    // ε_total from the enabled focusing mechanisms; high-pass is evaluated
    // once on the seed image so the cloak does not overfit one variant's
    // texture.
    BinaryMask sticker = BinaryMask::zeros(height, width);
    if (cfg.use_sticker) {
        const LandmarkSet landmarks =
            cfg.landmarks ? *cfg.landmarks : canonical_landmarks(height, width);
        sticker = build_sticker_mask(landmarks, cfg.sticker, height, width);
    }
    BinaryMask highpass = BinaryMask::zeros(height, width);
    if (cfg.use_highpass) {
        highpass = build_highpass_mask(variants.seed, cfg.highpass);
    }
    const BudgetMap budget = combine_budget(sticker, highpass, eps_f, eps_boosted_f);

    const std::size_t n_elems = plane_size(height, width);
    std::vector<double> delta(n_elems, 0.0);
    std::vector<double> alpha =
        cfg.use_attention ? init_attention(height, width, cfg.attention, cfg.rng_seed)
                          : std::vector<double>(n_elems, 1.0);

    const int n = variants.n();
    const ContrastiveTermObjective objective(anchors, 1.0 / static_cast<double>(n));

    std::vector<double> weighted(n_elems), projected(n_elems), perturbed(n_elems);
    std::vector<double> grad_projected(n_elems), grad_delta(n_elems), grad_alpha(n_elems);

    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        for (std::size_t i = 0; i < n_elems; ++i) weighted[i] = delta[i] * alpha[i];
        projected = project(weighted, budget);

        std::fill(grad_projected.begin(), grad_projected.end(), 0.0);
        double loss = 0.0;
        double max_abs_delta = 0.0;
        for (std::size_t i = 0; i < n_elems; ++i) {
            max_abs_delta = std::max(max_abs_delta, std::fabs(projected[i]));
        }

        for (int v = 0; v < n; ++v) {
            const std::vector<double>& source = variants.variants[v].data();
            for (std::size_t i = 0; i < n_elems; ++i) {
                perturbed[i] = std::clamp(source[i] + projected[i], 0.0, 1.0);
            }
            ImagePlane perturbed_image(height, width, perturbed);
            Embedding e = backend.embed(perturbed_image);
            loss += objective.value(e);
            std::vector<double> g;
            try {
                g = backend.input_gradient(perturbed_image, objective);
            } catch (const Error& err) {
                raise(err.kind(), "optimizer",
                      "gradient failed at iteration " + std::to_string(iter) + ": " + err.what());
            }
            // Pixels clipped by the [0,1] clamp receive zero gradient.
            for (std::size_t i = 0; i < n_elems; ++i) {
                const double raw = source[i] + projected[i];
                if (raw > 0.0 && raw < 1.0) grad_projected[i] += g[i];
            }
        }
        if (!std::isfinite(loss)) {
            raise(ErrorKind::NumericFailure, "optimizer",
                  "non-finite loss at iteration " + std::to_string(iter));
        }
        if (cfg.on_iteration) {
            cfg.on_iteration(IterationStats{iter, loss, max_abs_delta});
        }

        // Through the projection: clamped elements get zero gradient
        // (sub-gradient of the clamp, no straight-through).
        for (std::size_t i = 0; i < n_elems; ++i) {
            const double bound = budget.values()[i];
            const bool active = std::fabs(weighted[i]) <= bound;
            const double g = active ? grad_projected[i] : 0.0;
            grad_delta[i] = g * alpha[i];
            grad_alpha[i] = g * delta[i];
        }

        for (std::size_t i = 0; i < n_elems; ++i) {
            delta[i] -= cfg.step * sign_of(grad_delta[i]);
        }
        if (cfg.use_attention) {
            alpha = update_attention(alpha, grad_alpha, cfg.attention);
        }
    }

    // Stored delta is the final projected δ⊙α; re-clamped in float so the
    // budget bound is exact after the float32 round trip.
    for (std::size_t i = 0; i < n_elems; ++i) weighted[i] = delta[i] * alpha[i];
    projected = project(weighted, budget);
    std::vector<float> delta_f(n_elems), alpha_f(n_elems);
    for (std::size_t i = 0; i < n_elems; ++i) {
        const float bound = budget.values()[i];
        delta_f[i] = std::clamp(static_cast<float>(projected[i]), -bound, bound);
        alpha_f[i] = std::clamp(static_cast<float>(alpha[i]), 0.0f, 2.0f);
    }

    return CloakMask(height, width, std::move(delta_f), std::move(alpha_f), budget,
                     backend.descriptor().backend_id,
                     sha256_hex(variants.seed.payload_f32le()), cfg.config_digest);
}

ImagePlane apply_cloak(const ImagePlane& image, const CloakMask& cloak) {
    if (image.height() != cloak.height() || image.width() != cloak.width()) {
        raise(ErrorKind::ShapeMismatch, "optimizer", "cloak shape does not match image");
    }
    std::vector<double> out(image.size());
    const std::vector<double>& src = image.data();
    const std::vector<float>& delta = cloak.delta();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(src[i] + static_cast<double>(delta[i]), 0.0, 1.0);
    }
    return ImagePlane(image.height(), image.width(), std::move(out));
}

}  // namespace facecloak
