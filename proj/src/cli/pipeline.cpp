#include "facecloak/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "facecloak/error.hpp"
#include "facecloak/metrics.hpp"
#include "facecloak/onnx_backend.hpp"
#include "facecloak/sha256.hpp"
#include "facecloak/toy_backend.hpp"

namespace facecloak {

std::uint64_t identity_stream(std::uint64_t rng_seed, const std::string& identity) {
    const std::string digest = sha256_hex(identity);
    std::uint64_t h = 0;
    for (int i = 0; i < 16; ++i) {
        const char c = digest[i];
        h = (h << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return rng_seed ^ h;
}

std::unique_ptr<Backend> load_or_train_backend(const RunConfig& config) {
    if (config.backend.kind == "onnx") {
        return load_exported_backend(config.backend.weights_path);
    }
    if (!config.backend.weights_path.empty() &&
        std::filesystem::exists(config.backend.weights_path)) {
        return std::make_unique<ToyBackend>(load_toy_weights(config.backend.weights_path));
    }
    if (!config.backend.train_if_missing) {
        raise(ErrorKind::Io, "backends",
              "toy weights not found: " + config.backend.weights_path.string() +
                  " (set backend.train_if_missing to train from the dataset)");
    }

    // Train on everything except the probe images so held-out protection
    // numbers stay honest.
    const DatasetManifest manifest = scan_dataset(config.dataset_root);
    const ProbeGallerySplit split =
        build_split(manifest, config.probe_per_identity,
                    std::make_pair(config.backend.input_height, config.backend.input_width));
    std::map<std::string, std::vector<const ImagePlane*>> buckets;
    for (const auto& [identity, images] : split.injectable) {
        for (const ImagePlane& image : images) buckets[identity].push_back(&image);
    }
    for (const LabeledImage& item : split.gallery) buckets[item.label.value].push_back(&item.image);
    // Identities with too few images (typically distractor filler) stay in
    // the gallery but are left out of backend training.
    std::vector<LabeledImage> train_set;
    for (const auto& [identity, images] : buckets) {
        if (images.size() < 5) continue;
        for (const ImagePlane* image : images) {
            train_set.push_back({make_identity(identity), *image});
        }
    }

    ToyTrainConfig train_cfg;
    train_cfg.epochs = config.backend.train_epochs;
    train_cfg.holdout_per_identity = config.backend.train_holdout;
    train_cfg.learning_rate = config.backend.train_learning_rate;
    train_cfg.seed = config.rng_seed;
    train_cfg.backend_id = config.backend.backend_id;
    ToyBackendWeights weights = train_toy_backend(train_set, train_cfg);
    if (!config.backend.weights_path.empty()) {
        save_toy_weights(weights, config.backend.weights_path);
    }
    return std::make_unique<ToyBackend>(std::move(weights));
}

AnchorPool anchor_pool_from_cache(const GalleryCache& cache) {
    AnchorPool pool;
    pool.source = "fixed-gallery";
    pool.entries.reserve(cache.fixed.size());
    for (const auto& [label, embedding] : cache.fixed) {
        pool.entries.emplace_back(IdentityLabel{label}, embedding);
    }
    pool.validate();
    return pool;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = std::min<int>(jobs, static_cast<int>(count));
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

CloakSet generate_split_cloaks(const ProbeGallerySplit& split, const Backend& backend,
                               const AnchorPool& pool, const RunConfig& config,
                               const std::function<void(const std::string&)>& log) {
    std::vector<std::pair<std::string, const ImagePlane*>> seeds;
    seeds.reserve(split.injectable.size());
    for (const auto& [identity, images] : split.injectable) {
        seeds.emplace_back(identity, &images.front());
    }

    std::unique_ptr<GeneratorClient> client;
    GeneratorConfig generator{config.synthgen.kind, nullptr};
    if (config.synthgen.kind == GeneratorKind::External) {
        client = make_http_generator_client(config.synthgen.http);
        generator.client = client.get();
    }
    const std::string digest = config.digest();

    CloakSet cloaks;
    std::mutex sink_mutex;
    parallel_for(seeds.size(), config.jobs, [&](std::size_t i) {
        const auto& [identity, seed] = seeds[i];
        const std::uint64_t stream = identity_stream(config.rng_seed, identity);
        const VariantSet variants =
            generate_variants(*seed, config.optimizer.n_variants, generator, stream);
        const AnchorPair anchors = select_anchors(backend.embed(*seed), pool);

        OptimizerConfig opt = config.optimizer;
        opt.rng_seed = stream;
        opt.config_digest = digest;
        if (log) {
            const std::string id_copy = identity;
            opt.on_iteration = [&, id_copy](const IterationStats& stats) {
                char line[160];
                std::snprintf(line, sizeof(line),
                              R"({"identity":"%s","iteration":%d,"loss":%.6f,"max_abs_delta":%.6f})",
                              id_copy.c_str(), stats.iteration, stats.loss, stats.max_abs_delta);
                std::lock_guard<std::mutex> lock(sink_mutex);
                log(line);
            };
        }
        CloakMask cloak = optimize_cloak(variants, anchors, backend, opt);
        std::lock_guard<std::mutex> lock(sink_mutex);
        cloaks.emplace(identity, std::move(cloak));
    });
    return cloaks;
}

CloakSet zero_cloaks_for_split(const ProbeGallerySplit& split, const RunConfig& config,
                               const std::string& backend_id) {
    CloakSet cloaks;
    for (const auto& [identity, images] : split.injectable) {
        cloaks.emplace(identity,
                       CloakMask::zero(images.front().height(), images.front().width(),
                                       static_cast<float>(config.optimizer.eps),
                                       static_cast<float>(config.optimizer.eps_boosted),
                                       backend_id, "", config.digest()));
    }
    return cloaks;
}

EvalReport evaluate_split(const ProbeGallerySplit& split, const CloakSet& cloaks,
                          const Backend& backend, const RunConfig& config) {
    const GalleryCache cache = build_gallery_cache(split, backend);

    EvalReport report;
    report.backend_id = backend.descriptor().backend_id;
    report.eps = config.optimizer.eps;
    report.eps_boosted = config.optimizer.eps_boosted;
    report.iterations = config.optimizer.iterations;
    report.n_variants = config.optimizer.n_variants;
    report.config_digest = config.digest();
    report.probe_count = static_cast<int>(split.probes.size());
    report.top1_psr = top_n_psr_cached(split, cache, cloaks, backend, 1, nullptr, config.jobs);
    report.top5_psr = top_n_psr_cached(split, cache, cloaks, backend, 5, nullptr, config.jobs);

    double ssim_sum = 0.0;
    double mse_sum = 0.0;
    for (const LabeledImage& probe : split.probes) {
        const ImagePlane cloaked = apply_cloak(probe.image, cloaks.at(probe.label.value));
        ssim_sum += ssim(probe.image, cloaked);
        double mse = 0.0;
        for (std::size_t i = 0; i < cloaked.size(); ++i) {
            const double d = cloaked.data()[i] - probe.image.data()[i];
            mse += d * d;
        }
        mse_sum += mse / static_cast<double>(cloaked.size());
    }
    report.ssim_mean = ssim_sum / static_cast<double>(split.probes.size());
    const double mean_mse = mse_sum / static_cast<double>(split.probes.size());
    report.psnr_mean_db = mean_mse == 0.0 ? std::numeric_limits<double>::infinity()
                                          : -10.0 * std::log10(mean_mse);

    if (config.eval.verification) {
        // Threshold calibrated on clean pairs, then measured on cloaked ones.
        // Genuine: every (probe, same-identity injectable) pair; impostor:
        // (probe, first injectable of each other identity).
        std::vector<double> genuine, impostor;
        std::vector<std::pair<ImagePlane, ImagePlane>> cloaked_pairs;
        std::map<std::string, std::vector<Embedding>> references;
        for (const auto& [identity, images] : split.injectable) {
            for (const ImagePlane& image : images) {
                references[identity].push_back(backend.embed(image));
            }
        }
        for (const LabeledImage& probe : split.probes) {
            const Embedding clean = backend.embed(probe.image);
            for (const auto& [identity, embeddings] : references) {
                if (identity == probe.label.value) {
                    for (const Embedding& reference : embeddings) {
                        genuine.push_back(embedding_distance(clean, reference));
                    }
                } else {
                    impostor.push_back(embedding_distance(clean, embeddings.front()));
                }
            }
            const ImagePlane cloaked = apply_cloak(probe.image, cloaks.at(probe.label.value));
            cloaked_pairs.emplace_back(cloaked,
                                       split.injectable.at(probe.label.value).front());
        }
        const double threshold =
            calibrate_threshold_from_distances(genuine, impostor, config.eval.target_far);
        report.verification_psr = verification_psr(cloaked_pairs, backend, threshold);
    }

    for (const TransformSpec& spec : config.eval.transforms) {
        report.transform_rows.push_back(
            {spec, top_n_psr_cached(split, cache, cloaks, backend, 1, &spec, config.jobs)});
    }

    report.validate();
    return report;
}

}  // namespace facecloak
