#pragma once

#include <string>
#include <utility>
#include <vector>

#include "facecloak/image.hpp"

namespace facecloak {

// Opaque identity key; equality is exact string match.
struct IdentityLabel {
    std::string value;

    bool operator==(const IdentityLabel&) const = default;
    auto operator<=>(const IdentityLabel&) const = default;
};

IdentityLabel make_identity(std::string value);  // rejects empty

// Unit-norm feature vector produced by a backend.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);

    int dim() const noexcept { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](int i) const { return values_[i]; }

    bool operator==(const Embedding& other) const = default;

private:
    std::vector<double> values_;
};

// Distance convention fixed across the project: Euclidean distance between
// unit embeddings, for loss, anchor selection and identification ranking.
double embedding_distance(const Embedding& a, const Embedding& b);
double cosine_similarity(const Embedding& a, const Embedding& b);

// L2-normalize a raw feature vector; the 1e-12 floor guards the zero vector.
std::vector<double> l2_normalized(std::vector<double> values);

struct LabeledImage {
    IdentityLabel label;
    ImagePlane image;
};

struct AnchorPair {
    Embedding near;  // closest gallery embedding to the seed
    Embedding far;   // farthest
    IdentityLabel near_label;
    IdentityLabel far_label;
};

}  // namespace facecloak
