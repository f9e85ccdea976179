#pragma once

#include <memory>
#include <string>
#include <vector>

#include "facecloak/image.hpp"
#include "facecloak/types.hpp"

namespace facecloak {

struct BackendDescriptor {
    std::string backend_id;
    int input_height = 0;
    int input_width = 0;
    int embedding_dim = 0;
    bool differentiable = false;
};

// Scalar objective over embeddings with a closed-form gradient; the optimizer
// supplies the contrastive terms, the finite-difference oracle only uses
// value().
class EmbeddingObjective {
public:
    virtual ~EmbeddingObjective() = default;
    virtual double value(const Embedding& e) const = 0;
    virtual std::vector<double> gradient(const Embedding& e) const = 0;
};

// objective(e) = ⟨e, direction⟩
class LinearObjective : public EmbeddingObjective {
public:
    explicit LinearObjective(std::vector<double> direction) : direction_(std::move(direction)) {}
    double value(const Embedding& e) const override;
    std::vector<double> gradient(const Embedding& e) const override;

private:
    std::vector<double> direction_;
};

// Face-embedding backend φ. embed() is a pure function of (weights, image)
// and returns a unit-norm vector; input_gradient() is available only when
// the descriptor says differentiable.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;
    virtual Embedding embed(const ImagePlane& image) const = 0;

    // ∂ objective(embed(image)) / ∂ image, shape H×W×C.
    virtual std::vector<double> input_gradient(const ImagePlane& image,
                                               const EmbeddingObjective& objective) const;

protected:
    void check_input_shape(const ImagePlane& image) const;
};

}  // namespace facecloak
