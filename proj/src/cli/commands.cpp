#include "facecloak/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "facecloak/container.hpp"
#include "facecloak/error.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/metrics.hpp"
#include "facecloak/pipeline.hpp"

namespace facecloak {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigInvalid:
        case ErrorKind::OutOfRange:
            return 2;
        case ErrorKind::Io:
        case ErrorKind::Format:
        case ErrorKind::CorruptPayload:
        case ErrorKind::InvariantViolation:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::DatasetTooSmall:
            return 3;
        case ErrorKind::Capability:
        case ErrorKind::BackendFailure:
        case ErrorKind::TrainingFailure:
        case ErrorKind::NumericFailure:
        case ErrorKind::GenerationFailure:
        case ErrorKind::DetectionFailure:
            return 4;
    }
    return 1;
}

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        raise(ErrorKind::Io, "cli", "cannot create directory: " + dir.string());
    }
}

// The scan manifest lands beside the dataset root as <root>.manifest.json.
DatasetManifest scan_and_persist(const fs::path& root) {
    DatasetManifest manifest = scan_dataset(root);
    const fs::path absolute = fs::absolute(root);
    manifest.write_json(absolute.parent_path() / (absolute.filename().string() + ".manifest.json"));
    return manifest;
}

}  // namespace

int cmd_generate(const RunConfig& config, const std::vector<fs::path>& seed_paths,
                 std::ostream& out) {
    config.validate();
    if (seed_paths.empty()) {
        raise(ErrorKind::ConfigInvalid, "cli", "generate needs at least one seed image");
    }
    const auto backend = load_or_train_backend(config);
    const DatasetManifest manifest = scan_and_persist(config.dataset_root);
    const ProbeGallerySplit split =
        build_split(manifest, config.probe_per_identity,
                    std::make_pair(config.backend.input_height, config.backend.input_width));
    const GalleryCache cache = build_gallery_cache(split, *backend);
    const AnchorPool pool = anchor_pool_from_cache(cache);
    const std::string digest = config.digest();
    ensure_dir(config.output_dir);

    std::unique_ptr<GeneratorClient> client;
    GeneratorConfig generator{config.synthgen.kind, nullptr};
    if (config.synthgen.kind == GeneratorKind::External) {
        client = make_http_generator_client(config.synthgen.http);
        generator.client = client.get();
    }

    for (const fs::path& seed_path : seed_paths) {
        ImagePlane seed = load_image(seed_path);
        if (seed.height() != config.backend.input_height ||
            seed.width() != config.backend.input_width) {
            seed = resize_and_center(seed, config.backend.input_height,
                                     config.backend.input_width);
        }
        const std::uint64_t stream = identity_stream(config.rng_seed, seed_path.stem().string());
        const VariantSet variants =
            generate_variants(seed, config.optimizer.n_variants, generator, stream);
        const AnchorPair anchors = select_anchors(backend->embed(seed), pool);

        OptimizerConfig opt = config.optimizer;
        opt.rng_seed = stream;
        opt.config_digest = digest;
        opt.on_iteration = [&](const IterationStats& stats) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          R"({"seed":"%s","iteration":%d,"loss":%.6f,"max_abs_delta":%.6f})",
                          seed_path.stem().string().c_str(), stats.iteration, stats.loss,
                          stats.max_abs_delta);
            out << line << "\n";
        };
        const CloakMask cloak = optimize_cloak(variants, anchors, *backend, opt);
        const fs::path cloak_path = config.output_dir / (seed_path.stem().string() + ".fclk");
        save_cloak(cloak, cloak_path);
        out << cloak_path.string() << "\n";
    }
    return 0;
}

int cmd_apply(const fs::path& cloak_path, const std::vector<fs::path>& image_paths,
              const fs::path& output_dir, std::ostream& out) {
    if (image_paths.empty()) {
        raise(ErrorKind::ConfigInvalid, "cli", "apply needs at least one image");
    }
    const CloakMask cloak = load_cloak(cloak_path);
    ensure_dir(output_dir);

    int failures = 0;
    double total_apply_ms = 0.0;
    for (const fs::path& image_path : image_paths) {
        try {
            const ImagePlane image = load_image(image_path);
            const auto start = std::chrono::steady_clock::now();
            const ImagePlane protected_image = apply_cloak(image, cloak);
            const double elapsed_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
            total_apply_ms += elapsed_ms;
            const fs::path out_path =
                output_dir / (image_path.stem().string() + "_protected.png");
            save_png(protected_image, out_path);
            char line[256];
            std::snprintf(line, sizeof(line), "%s (%.2f ms apply)", out_path.string().c_str(),
                          elapsed_ms);
            out << line << "\n";
        } catch (const Error& e) {
            ++failures;
            std::cerr << R"({"stage":")" << e.stage() << R"(","kind":")" << to_string(e.kind())
                      << R"(","message":")" << e.what() << R"(","file":")" << image_path.string()
                      << R"("})" << "\n";
        }
    }
    char summary[160];
    std::snprintf(summary, sizeof(summary), "applied %zu/%zu images, mean %.2f ms",
                  image_paths.size() - failures, image_paths.size(),
                  total_apply_ms / std::max<std::size_t>(image_paths.size() - failures, 1));
    out << summary << "\n";
    if (failures == static_cast<int>(image_paths.size())) return 3;
    return failures > 0 ? 5 : 0;
}

int cmd_eval(const RunConfig& config, EvalCloakSource source,
             const std::optional<fs::path>& cloaks_dir, std::ostream& out) {
    config.validate();
    const auto backend = load_or_train_backend(config);
    const DatasetManifest manifest = scan_and_persist(config.dataset_root);
    const ProbeGallerySplit split =
        build_split(manifest, config.probe_per_identity,
                    std::make_pair(config.backend.input_height, config.backend.input_width));

    CloakSet cloaks;
    switch (source) {
        case EvalCloakSource::Zero:
            cloaks = zero_cloaks_for_split(split, config, backend->descriptor().backend_id);
            break;
        case EvalCloakSource::LoadDir: {
            if (!cloaks_dir) {
                raise(ErrorKind::ConfigInvalid, "cli", "--cloaks directory is required");
            }
            for (const auto& [identity, images] : split.injectable) {
                (void)images;
                const fs::path path = *cloaks_dir / (identity + ".fclk");
                if (!fs::exists(path)) {
                    raise(ErrorKind::Io, "cli",
                          "missing cloak for identity '" + identity + "': " + path.string());
                }
                cloaks.emplace(identity, load_cloak(path));
            }
            break;
        }
        case EvalCloakSource::Generate: {
            const GalleryCache cache = build_gallery_cache(split, *backend);
            const AnchorPool pool = anchor_pool_from_cache(cache);
            cloaks = generate_split_cloaks(split, *backend, pool, config,
                                           [&](const std::string& line) { out << line << "\n"; });
            ensure_dir(config.output_dir / "cloaks");
            for (const auto& [identity, cloak] : cloaks) {
                save_cloak(cloak, config.output_dir / "cloaks" / (identity + ".fclk"));
            }
            break;
        }
    }

    const EvalReport report = evaluate_split(split, cloaks, *backend, config);
    ensure_dir(config.output_dir);
    const fs::path json_path = config.output_dir / "report.json";
    {
        std::ofstream json_out(json_path, std::ios::trunc);
        json_out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream csv(config.output_dir / "report.csv", std::ios::trunc);
        csv << "top1,top5,ssim,psnr\n";
        char line[128];
        std::snprintf(line, sizeof(line), "%.4f,%.4f,%.6f,%.4f\n", report.top1_psr,
                      report.top5_psr, report.ssim_mean,
                      std::isinf(report.psnr_mean_db) ? 999.0 : report.psnr_mean_db);
        csv << line;
    }
    std::ofstream text_out(config.output_dir / "report.txt", std::ios::trunc);
    text_out << report.to_text_table();
    out << report.to_text_table();
    out << "report: " << json_path.string() << "\n";
    return 0;
}

int cmd_ablate(const RunConfig& config, const std::string& axis,
               const std::vector<std::string>& values, std::ostream& out) {
    config.validate();
    if (axis != "eps" && axis != "iterations" && axis != "n_variants") {
        raise(ErrorKind::ConfigInvalid, "cli",
              "ablate axis must be eps, iterations or n_variants");
    }
    if (values.empty()) {
        raise(ErrorKind::ConfigInvalid, "cli", "ablate needs at least one axis value");
    }
    const auto backend = load_or_train_backend(config);
    const DatasetManifest manifest = scan_and_persist(config.dataset_root);
    const ProbeGallerySplit split =
        build_split(manifest, config.probe_per_identity,
                    std::make_pair(config.backend.input_height, config.backend.input_width));
    const GalleryCache cache = build_gallery_cache(split, *backend);
    const AnchorPool pool = anchor_pool_from_cache(cache);

    ensure_dir(config.output_dir);
    const fs::path csv_path = config.output_dir / ("ablate_" + axis + ".csv");
    std::ofstream csv(csv_path, std::ios::trunc);
    csv << "axis_value,top1,top5,ssim,psnr\n";

    for (const std::string& value : values) {
        RunConfig run = config;
        if (axis == "eps") {
            run.optimizer.eps = parse_real(value, "ablate eps");
            run.optimizer.eps_boosted = std::max(run.optimizer.eps_boosted, run.optimizer.eps);
            run.optimizer.step = std::min(run.optimizer.step, run.optimizer.eps);
        } else if (axis == "iterations") {
            run.optimizer.iterations = std::stoi(value);
        } else {
            run.optimizer.n_variants = std::stoi(value);
        }
        run.validate();
        const CloakSet cloaks = generate_split_cloaks(split, *backend, pool, run, nullptr);
        const EvalReport report = evaluate_split(split, cloaks, *backend, run);
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.4f,%.4f,%.6f,%.4f", value.c_str(),
                      report.top1_psr, report.top5_psr, report.ssim_mean,
                      std::isinf(report.psnr_mean_db) ? 999.0 : report.psnr_mean_db);
        csv << line << "\n";
        out << line << "\n";
    }
    out << csv_path.string() << "\n";
    return 0;
}

int cmd_inspect(const fs::path& cloak_path, std::ostream& out) {
    const nlohmann::ordered_json header = read_container_header(cloak_path, kCloakMagic);
    out << header.dump(2) << "\n";
    return 0;
}

}  // namespace facecloak
