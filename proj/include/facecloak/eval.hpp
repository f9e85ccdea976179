#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "facecloak/backend.hpp"
#include "facecloak/cloak.hpp"
#include "facecloak/ingestion.hpp"
#include "facecloak/transforms.hpp"
#include "facecloak/types.hpp"

namespace facecloak {

using CloakSet = std::map<std::string, CloakMask>;  // by identity

// Gallery embeddings are computed once and shared read-only across probes.
struct GalleryCache {
    std::vector<std::pair<std::string, Embedding>> fixed;
    std::map<std::string, std::vector<Embedding>> injectable;
};

GalleryCache build_gallery_cache(const ProbeGallerySplit& split, const Backend& backend);

// Identification protocol: per probe, its identity's clean images are
// temporarily injected into the gallery, the cloaked probe is embedded and
// the gallery ranked by embedding distance; the probe is protected iff no
// same-identity image lands in the n nearest. Returns PSR in percent.
double top_n_psr(const ProbeGallerySplit& split, const CloakSet& cloaks, const Backend& backend,
                 int n);

// Same, against a prebuilt cache and an optional post-application transform.
// Per-probe scoring is independent; jobs > 1 fans it out over threads.
double top_n_psr_cached(const ProbeGallerySplit& split, const GalleryCache& cache,
                        const CloakSet& cloaks, const Backend& backend, int n,
                        const TransformSpec* post_transform = nullptr, int jobs = 1);

// 1:1 verification: a pair is protected iff the embedding distance between
// the cloaked image and its same-identity reference exceeds the threshold.
double verification_psr(const std::vector<std::pair<ImagePlane, ImagePlane>>& pairs,
                        const Backend& backend, double threshold);

// Largest threshold whose false-accept rate on impostor pairs stays at or
// below target_far, placed midway between the last accepted and first
// rejected distances.
double calibrate_threshold(const std::vector<std::pair<ImagePlane, ImagePlane>>& genuine_pairs,
                           const std::vector<std::pair<ImagePlane, ImagePlane>>& impostor_pairs,
                           const Backend& backend, double target_far = 0.01);

double calibrate_threshold_from_distances(std::vector<double> genuine,
                                          std::vector<double> impostor, double target_far);

struct TransformRow {
    TransformSpec spec;
    double top1_psr = 0.0;
};

std::vector<TransformRow> robustness_sweep(const ProbeGallerySplit& split, const CloakSet& cloaks,
                                           const Backend& backend,
                                           const std::vector<TransformSpec>& transforms, int n);

// One run configuration's results; serializes with a stable field order.
struct EvalReport {
    std::string backend_id;
    double eps = 0.0;
    double eps_boosted = 0.0;
    int iterations = 0;
    int n_variants = 0;
    std::string config_digest;
    int probe_count = 0;
    double top1_psr = 0.0;
    double top5_psr = 0.0;
    std::optional<double> verification_psr;
    double ssim_mean = 0.0;
    double psnr_mean_db = 0.0;
    std::vector<TransformRow> transform_rows;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    std::string to_text_table() const;
};

// Structural check against docs/eval_report.schema.json (required fields,
// types, ranges).
void validate_report_json(const nlohmann::ordered_json& doc);

}  // namespace facecloak
