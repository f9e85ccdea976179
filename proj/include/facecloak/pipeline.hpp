#pragma once

#include <functional>
#include <memory>
#include <string>

#include "facecloak/config.hpp"
#include "facecloak/eval.hpp"
#include "facecloak/ingestion.hpp"
#include "facecloak/optimizer.hpp"

namespace facecloak {

// Loads the configured backend; for toy backends with train_if_missing, a
// missing weights file triggers deterministic training on the non-probe
// images of the dataset and persists the result.
std::unique_ptr<Backend> load_or_train_backend(const RunConfig& config);

AnchorPool anchor_pool_from_cache(const GalleryCache& cache);

// One cloak per probe identity: seed = first injectable image, variants from
// the configured generator, anchors from the distractor gallery. Parallel
// over identities when jobs > 1; per-identity rng streams keep results
// independent of scheduling.
CloakSet generate_split_cloaks(const ProbeGallerySplit& split, const Backend& backend,
                               const AnchorPool& pool, const RunConfig& config,
                               const std::function<void(const std::string&)>& log = nullptr);

CloakSet zero_cloaks_for_split(const ProbeGallerySplit& split, const RunConfig& config,
                               const std::string& backend_id);

// Top-1/Top-5 PSR, perceptual metrics, optional verification and robustness
// rows for one cloak set.
EvalReport evaluate_split(const ProbeGallerySplit& split, const CloakSet& cloaks,
                          const Backend& backend, const RunConfig& config);

std::uint64_t identity_stream(std::uint64_t rng_seed, const std::string& identity);

}  // namespace facecloak
