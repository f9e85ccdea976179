#include "facecloak/types.hpp"

#include <cmath>

#include "facecloak/error.hpp"

namespace facecloak {

IdentityLabel make_identity(std::string value) {
    if (value.empty()) {
        raise(ErrorKind::InvariantViolation, "core", "identity label must be non-empty");
    }
    return IdentityLabel{std::move(value)};
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
        raise(ErrorKind::InvariantViolation, "core", "embedding dimension must be at least 2");
    }
    double norm_sq = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) {
            raise(ErrorKind::InvariantViolation, "core", "embedding contains non-finite value");
        }
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (std::abs(norm - 1.0) > 1e-6) {
        raise(ErrorKind::InvariantViolation, "core",
              "embedding norm " + std::to_string(norm) + " is not 1 within 1e-6");
    }
}

double embedding_distance(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        raise(ErrorKind::ShapeMismatch, "core", "embedding dimensions differ");
    }
    double sum = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        raise(ErrorKind::ShapeMismatch, "core", "embedding dimensions differ");
    }
    double dot = 0.0;
    for (int i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
    return dot;
}

std::vector<double> l2_normalized(std::vector<double> values) {
    double norm_sq = 0.0;
    for (double v : values) norm_sq += v * v;
    const double norm = std::max(std::sqrt(norm_sq), 1e-12);
    for (double& v : values) v /= norm;
    return values;
}

}  // namespace facecloak
