#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace facecloak {

// Per-pixel-per-channel perturbation bound. Every element is exactly
// base_eps or boosted_eps; values are float32 so the serialized payload
// round-trips bit-exactly and the budget comparison is exact.
class BudgetMap {
public:
    BudgetMap(int height, int width, std::vector<float> values, float base_eps, float boosted_eps);

    static BudgetMap uniform(int height, int width, float eps);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    float base_eps() const noexcept { return base_eps_; }
    float boosted_eps() const noexcept { return boosted_eps_; }
    const std::vector<float>& values() const noexcept { return values_; }

    float at(int y, int x, int c) const {
        return values_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }

    bool operator==(const BudgetMap&) const = default;

private:
    int height_;
    int width_;
    std::vector<float> values_;
    float base_eps_;
    float boosted_eps_;
};

// The persisted artifact: the projected perturbation δ⊙α, the attention map
// that shaped it, and the budget it was projected onto. delta already has
// attention folded in, so |delta| ≤ budget at every element and application
// needs no optimizer state.
class CloakMask {
public:
    CloakMask(int height, int width, std::vector<float> delta, std::vector<float> attention,
              BudgetMap budget, std::string backend_id, std::string seed_identity_hash,
              std::string config_digest);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const std::vector<float>& delta() const noexcept { return delta_; }
    const std::vector<float>& attention() const noexcept { return attention_; }
    const BudgetMap& budget() const noexcept { return budget_; }
    const std::string& backend_id() const noexcept { return backend_id_; }
    const std::string& seed_identity_hash() const noexcept { return seed_identity_hash_; }
    const std::string& config_digest() const noexcept { return config_digest_; }

    static CloakMask zero(int height, int width, float eps, float boosted_eps,
                          std::string backend_id = "none", std::string seed_identity_hash = "",
                          std::string config_digest = "");

    bool operator==(const CloakMask&) const = default;

private:
    int height_;
    int width_;
    std::vector<float> delta_;
    std::vector<float> attention_;
    BudgetMap budget_;
    std::string backend_id_;
    std::string seed_identity_hash_;
    std::string config_digest_;
};

}  // namespace facecloak
