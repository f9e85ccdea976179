#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facecloak/backend.hpp"
#include "facecloak/image.hpp"
#include "facecloak/types.hpp"

namespace facecloak::testutil {

// Procedural face-like corpus: each identity is a parameter vector (skin
// tone, face geometry, eye/nose/mouth placement, hair, moles, background
// texture); images of one identity are small photometric/geometric jitters
// of the canonical rendering. Deterministic per seed. `spread` scales the
// identity parameters' deviation from their range midpoints: 1.0 keeps the
// full variety, smaller values crowd the identities together (a harder,
// same-demographic gallery).
ImagePlane render_identity_face(int height, int width, std::uint64_t corpus_seed,
                                int identity_index, double spread = 1.0);

ImagePlane render_face_image(int height, int width, std::uint64_t corpus_seed, int identity_index,
                             int image_index, double spread = 1.0);

std::vector<LabeledImage> build_toy_corpus(int n_identities, int images_per_identity, int height,
                                           int width, std::uint64_t corpus_seed);

std::string identity_name(int identity_index);

// Writes a probe/gallery/distractor tree of PNGs for ingestion/CLI tests:
// probe identities come from [0, n_probe_ids), distractors from a disjoint
// index range.
void write_corpus_tree(const std::filesystem::path& root, int n_probe_ids, int images_per_identity,
                       int n_distractor_ids, int images_per_distractor, int height, int width,
                       std::uint64_t corpus_seed);

// RAII scratch directory under the system temp root.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// embed(x) = normalize(W · flatten(x)): the analytically differentiable
// backend used by gradient-oracle tests.
class LinearBackend : public Backend {
public:
    LinearBackend(int height, int width, int dim, std::uint64_t seed);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    Embedding embed(const ImagePlane& image) const override;
    std::vector<double> input_gradient(const ImagePlane& image,
                                       const EmbeddingObjective& objective) const override;

    const std::vector<double>& matrix() const { return weights_; }

private:
    std::vector<double> raw_feature(const ImagePlane& image) const;

    BackendDescriptor descriptor_;
    std::vector<double> weights_;  // [dim][H·W·C]
};

}  // namespace facecloak::testutil
