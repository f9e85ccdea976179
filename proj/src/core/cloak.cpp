#include "facecloak/cloak.hpp"

#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/image.hpp"

namespace facecloak {

BudgetMap::BudgetMap(int height, int width, std::vector<float> values, float base_eps,
                     float boosted_eps)
    : height_(height),
      width_(width),
      values_(std::move(values)),
      base_eps_(base_eps),
      boosted_eps_(boosted_eps) {
    if (values_.size() != plane_size(height_, width_)) {
        raise(ErrorKind::ShapeMismatch, "core", "budget map size does not match its shape");
    }
    if (!(base_eps_ >= 0.0f) || !(boosted_eps_ >= base_eps_) || !(boosted_eps_ <= 1.0f)) {
        raise(ErrorKind::InvariantViolation, "core",
              "budget bounds must satisfy 0 ≤ eps ≤ eps_A ≤ 1 (eps=" + std::to_string(base_eps_) +
                  ", eps_A=" + std::to_string(boosted_eps_) + ")");
    }
    for (float v : values_) {
        if (v != base_eps_ && v != boosted_eps_) {
            raise(ErrorKind::InvariantViolation, "core",
                  "budget element " + std::to_string(v) + " is neither eps nor eps_A");
        }
    }
}

BudgetMap BudgetMap::uniform(int height, int width, float eps) {
    return BudgetMap(height, width, std::vector<float>(plane_size(height, width), eps), eps, eps);
}

CloakMask::CloakMask(int height, int width, std::vector<float> delta, std::vector<float> attention,
                     BudgetMap budget, std::string backend_id, std::string seed_identity_hash,
                     std::string config_digest)
    : height_(height),
      width_(width),
      delta_(std::move(delta)),
      attention_(std::move(attention)),
      budget_(std::move(budget)),
      backend_id_(std::move(backend_id)),
      seed_identity_hash_(std::move(seed_identity_hash)),
      config_digest_(std::move(config_digest)) {
    const std::size_t n = plane_size(height_, width_);
    if (delta_.size() != n || attention_.size() != n || budget_.height() != height_ ||
        budget_.width() != width_) {
        raise(ErrorKind::ShapeMismatch, "core", "cloak tensors disagree on shape");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(delta_[i]) || std::fabs(delta_[i]) > budget_.values()[i]) {
            raise(ErrorKind::InvariantViolation, "core",
                  "cloak delta exceeds its budget at element " + std::to_string(i));
        }
        if (!(attention_[i] >= 0.0f && attention_[i] <= 2.0f)) {
            raise(ErrorKind::InvariantViolation, "core",
                  "attention element outside [0, 2] at " + std::to_string(i));
        }
    }
}

CloakMask CloakMask::zero(int height, int width, float eps, float boosted_eps,
                          std::string backend_id, std::string seed_identity_hash,
                          std::string config_digest) {
    const std::size_t n = plane_size(height, width);
    std::vector<float> budget_values(n, eps);
    return CloakMask(height, width, std::vector<float>(n, 0.0f), std::vector<float>(n, 1.0f),
                     BudgetMap(height, width, std::move(budget_values), eps, boosted_eps),
                     std::move(backend_id), std::move(seed_identity_hash),
                     std::move(config_digest));
}

}  // namespace facecloak
