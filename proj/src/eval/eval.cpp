#include "facecloak/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "facecloak/error.hpp"
#include "facecloak/optimizer.hpp"

namespace facecloak {

GalleryCache build_gallery_cache(const ProbeGallerySplit& split, const Backend& backend) {
    GalleryCache cache;
    cache.fixed.reserve(split.gallery.size());
    for (const LabeledImage& item : split.gallery) {
        cache.fixed.emplace_back(item.label.value, backend.embed(item.image));
    }
    for (const auto& [identity, images] : split.injectable) {
        std::vector<Embedding>& embeddings = cache.injectable[identity];
        embeddings.reserve(images.size());
        for (const ImagePlane& image : images) embeddings.push_back(backend.embed(image));
    }
    return cache;
}

namespace {

bool probe_protected(const Embedding& probe, const std::string& identity,
                     const GalleryCache& cache, int n) {
    // Rank the fixed gallery plus the temporarily injected same-identity
    // images; stable (distance, insertion index) order keeps ties
    // deterministic.
    struct Entry {
        double distance;
        std::size_t index;
        bool same_identity;
    };
    std::vector<Entry> entries;
    entries.reserve(cache.fixed.size() + 16);
    for (const auto& [label, embedding] : cache.fixed) {
        entries.push_back({embedding_distance(probe, embedding), entries.size(),
                           label == identity});
    }
    const auto it = cache.injectable.find(identity);
    if (it == cache.injectable.end() || it->second.empty()) {
        raise(ErrorKind::InvariantViolation, "eval",
              "probe identity '" + identity + "' has no injectable images");
    }
    for (const Embedding& embedding : it->second) {
        entries.push_back({embedding_distance(probe, embedding), entries.size(), true});
    }
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(n), entries.size());
    std::partial_sort(entries.begin(), entries.begin() + top, entries.end(),
                      [](const Entry& a, const Entry& b) {
                          return a.distance != b.distance ? a.distance < b.distance
                                                          : a.index < b.index;
                      });
    for (std::size_t i = 0; i < top; ++i) {
        if (entries[i].same_identity) return false;
    }
    return true;
}

const CloakMask& cloak_for(const CloakSet& cloaks, const std::string& identity) {
    const auto it = cloaks.find(identity);
    if (it == cloaks.end()) {
        raise(ErrorKind::InvariantViolation, "eval",
              "no cloak provided for probe identity '" + identity + "'");
    }
    return it->second;
}

}  // namespace

double top_n_psr_cached(const ProbeGallerySplit& split, const GalleryCache& cache,
                        const CloakSet& cloaks, const Backend& backend, int n,
                        const TransformSpec* post_transform, int jobs) {
    if (n < 1) {
        raise(ErrorKind::OutOfRange, "eval", "top-n rank must be at least 1");
    }
    split.validate();
    auto score_probe = [&](const LabeledImage& probe) {
        ImagePlane cloaked = apply_cloak(probe.image, cloak_for(cloaks, probe.label.value));
        if (post_transform) {
            cloaked = apply_transform(cloaked, *post_transform);
        }
        return probe_protected(backend.embed(cloaked), probe.label.value, cache, n);
    };

    std::atomic<int> protected_count{0};
    if (jobs <= 1 || split.probes.size() <= 1) {
        for (const LabeledImage& probe : split.probes) {
            if (score_probe(probe)) protected_count.fetch_add(1);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= split.probes.size()) return;
                try {
                    if (score_probe(split.probes[i])) protected_count.fetch_add(1);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        const int n_threads = std::min<int>(jobs, static_cast<int>(split.probes.size()));
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return 100.0 * static_cast<double>(protected_count.load()) /
           static_cast<double>(split.probes.size());
}

double top_n_psr(const ProbeGallerySplit& split, const CloakSet& cloaks, const Backend& backend,
                 int n) {
    const GalleryCache cache = build_gallery_cache(split, backend);
    return top_n_psr_cached(split, cache, cloaks, backend, n, nullptr);
}

double verification_psr(const std::vector<std::pair<ImagePlane, ImagePlane>>& pairs,
                        const Backend& backend, double threshold) {
    if (pairs.empty()) {
        raise(ErrorKind::DatasetTooSmall, "eval", "verification over an empty pair list");
    }
    int protected_count = 0;
    for (const auto& [cloaked, reference] : pairs) {
        const double d = embedding_distance(backend.embed(cloaked), backend.embed(reference));
        if (d > threshold) ++protected_count;
    }
    return 100.0 * static_cast<double>(protected_count) / static_cast<double>(pairs.size());
}

double calibrate_threshold_from_distances(std::vector<double> genuine,
                                          std::vector<double> impostor, double target_far) {
    if (genuine.size() < 100 || impostor.size() < 100) {
        raise(ErrorKind::DatasetTooSmall, "eval",
              "threshold calibration needs at least 100 genuine and 100 impostor pairs");
    }
    if (target_far < 0.0 || target_far > 1.0) {
        raise(ErrorKind::OutOfRange, "eval", "target FAR must lie in [0, 1]");
    }
    std::sort(impostor.begin(), impostor.end());
    const std::size_t allowed =
        static_cast<std::size_t>(target_far * static_cast<double>(impostor.size()));
    if (allowed >= impostor.size()) {
        const double max_gen = *std::max_element(genuine.begin(), genuine.end());
        return std::max(impostor.back(), max_gen) + 1e-6;
    }
    // First impostor distance that must be rejected (accept ⇔ d ≤ threshold).
    const double first_rejected = impostor[allowed];
    double below = 0.0;
    bool found = false;
    for (double d : impostor) {
        if (d < first_rejected && (!found || d > below)) {
            below = d;
            found = true;
        }
    }
    for (double d : genuine) {
        if (d < first_rejected && (!found || d > below)) {
            below = d;
            found = true;
        }
    }
    return found ? 0.5 * (below + first_rejected) : 0.5 * first_rejected;
}

double calibrate_threshold(const std::vector<std::pair<ImagePlane, ImagePlane>>& genuine_pairs,
                           const std::vector<std::pair<ImagePlane, ImagePlane>>& impostor_pairs,
                           const Backend& backend, double target_far) {
    auto distances = [&](const std::vector<std::pair<ImagePlane, ImagePlane>>& pairs) {
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& [a, b] : pairs) {
            out.push_back(embedding_distance(backend.embed(a), backend.embed(b)));
        }
        return out;
    };
    return calibrate_threshold_from_distances(distances(genuine_pairs), distances(impostor_pairs),
                                              target_far);
}

std::vector<TransformRow> robustness_sweep(const ProbeGallerySplit& split, const CloakSet& cloaks,
                                           const Backend& backend,
                                           const std::vector<TransformSpec>& transforms, int n) {
    std::vector<TransformRow> rows;
    if (transforms.empty()) return rows;
    const GalleryCache cache = build_gallery_cache(split, backend);
    rows.reserve(transforms.size());
    for (const TransformSpec& spec : transforms) {
        rows.push_back({spec, top_n_psr_cached(split, cache, cloaks, backend, n, &spec)});
    }
    return rows;
}

void EvalReport::validate() const {
    auto check_psr = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 100.0)) {
            raise(ErrorKind::InvariantViolation, "eval",
                  std::string(name) + " outside [0, 100]");
        }
    };
    check_psr(top1_psr, "top1_psr");
    check_psr(top5_psr, "top5_psr");
    if (verification_psr) check_psr(*verification_psr, "verification_psr");
    for (const TransformRow& row : transform_rows) check_psr(row.top1_psr, "transform psr");
    if (!(ssim_mean >= -1.0 && ssim_mean <= 1.0)) {
        raise(ErrorKind::InvariantViolation, "eval", "ssim_mean outside [−1, 1]");
    }
    if (!(psnr_mean_db > 0.0)) {
        raise(ErrorKind::InvariantViolation, "eval", "psnr_mean_db must be positive");
    }
}

namespace {

nlohmann::ordered_json json_psnr(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["schema"] = "facecloak-eval-report/1";
    doc["backend_id"] = backend_id;
    doc["eps"] = eps;
    doc["eps_boosted"] = eps_boosted;
    doc["iterations"] = iterations;
    doc["n_variants"] = n_variants;
    doc["config_digest"] = config_digest;
    doc["probe_count"] = probe_count;
    doc["top1_psr"] = top1_psr;
    doc["top5_psr"] = top5_psr;
    doc["verification_psr"] =
        verification_psr ? nlohmann::ordered_json(*verification_psr) : nlohmann::ordered_json(nullptr);
    doc["ssim_mean"] = ssim_mean;
    doc["psnr_mean_db"] = json_psnr(psnr_mean_db);
    doc["transforms"] = nlohmann::ordered_json::array();
    for (const TransformRow& row : transform_rows) {
        doc["transforms"].push_back({{"kind", to_string(row.spec.kind)},
                                     {"strength", row.spec.strength},
                                     {"top1_psr", row.top1_psr}});
    }
    return doc;
}

std::string EvalReport::to_text_table() const {
    std::ostringstream out;
    char line[160];
    out << "metric                    value\n";
    out << "------------------------  ----------\n";
    std::snprintf(line, sizeof(line), "%-24s  %s\n", "backend", backend_id.c_str());
    out << line;
    std::snprintf(line, sizeof(line), "%-24s  %d\n", "probes", probe_count);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s  %.2f\n", "top-1 PSR (%)", top1_psr);
    out << line;
    std::snprintf(line, sizeof(line), "%-24s  %.2f\n", "top-5 PSR (%)", top5_psr);
    out << line;
    if (verification_psr) {
        std::snprintf(line, sizeof(line), "%-24s  %.2f\n", "verification PSR (%)",
                      *verification_psr);
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-24s  %.4f\n", "SSIM (mean)", ssim_mean);
    out << line;
    if (std::isinf(psnr_mean_db)) {
        std::snprintf(line, sizeof(line), "%-24s  inf\n", "PSNR dB (mean)");
    } else {
        std::snprintf(line, sizeof(line), "%-24s  %.2f\n", "PSNR dB (mean)", psnr_mean_db);
    }
    out << line;
    for (const TransformRow& row : transform_rows) {
        std::snprintf(line, sizeof(line), "%-24s  %.2f\n",
                      ("top-1 PSR @ " + row.spec.label() + " (%)").c_str(), row.top1_psr);
        out << line;
    }
    return out.str();
}

void validate_report_json(const nlohmann::ordered_json& doc) {
    auto require = [&](const char* key, bool ok) {
        if (!doc.contains(key) || !ok) {
            raise(ErrorKind::Format, "eval",
                  std::string("report JSON missing or mistyped field '") + key + "'");
        }
    };
    require("schema", doc.value("schema", "") == "facecloak-eval-report/1");
    require("backend_id", doc.contains("backend_id") && doc["backend_id"].is_string());
    require("eps", doc.contains("eps") && doc["eps"].is_number());
    require("eps_boosted", doc.contains("eps_boosted") && doc["eps_boosted"].is_number());
    require("iterations", doc.contains("iterations") && doc["iterations"].is_number_integer());
    require("n_variants", doc.contains("n_variants") && doc["n_variants"].is_number_integer());
    require("config_digest", doc.contains("config_digest") && doc["config_digest"].is_string());
    require("probe_count", doc.contains("probe_count") && doc["probe_count"].is_number_integer());
    for (const char* key : {"top1_psr", "top5_psr"}) {
        require(key, doc.contains(key) && doc[key].is_number() &&
                         doc[key].get<double>() >= 0.0 && doc[key].get<double>() <= 100.0);
    }
    require("verification_psr",
            doc.contains("verification_psr") &&
                (doc["verification_psr"].is_null() || doc["verification_psr"].is_number()));
    require("ssim_mean", doc.contains("ssim_mean") && doc["ssim_mean"].is_number());
    require("psnr_mean_db", doc.contains("psnr_mean_db") &&
                                (doc["psnr_mean_db"].is_number() ||
                                 doc["psnr_mean_db"] == "inf"));
    require("transforms", doc.contains("transforms") && doc["transforms"].is_array());
    for (const auto& row : doc["transforms"]) {
        require("transforms", row.is_object() && row.contains("kind") &&
                                  row.contains("strength") && row.contains("top1_psr"));
    }
}

}  // namespace facecloak
