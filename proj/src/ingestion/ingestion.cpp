#include "facecloak/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "facecloak/error.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/sha256.hpp"

namespace facecloak {

namespace fs = std::filesystem;

const char* to_string(DatasetRole role) {
    switch (role) {
        case DatasetRole::Probe: return "probe";
        case DatasetRole::Gallery: return "gallery";
        case DatasetRole::Distractor: return "distractor";
    }
    return "unknown";
}

namespace {

bool has_image_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DatasetManifest scan_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) {
        raise(ErrorKind::Io, "ingestion", "dataset root is not a directory: " + root.string());
    }
    DatasetManifest manifest;
    manifest.root = fs::absolute(root);

    // Deterministic walk: roles in fixed order, identities and files sorted.
    for (DatasetRole role : {DatasetRole::Probe, DatasetRole::Gallery, DatasetRole::Distractor}) {
        const fs::path role_dir = manifest.root / to_string(role);
        if (!fs::is_directory(role_dir)) continue;
        std::vector<fs::path> identity_dirs;
        for (const auto& entry : fs::directory_iterator(role_dir)) {
            if (entry.is_directory()) identity_dirs.push_back(entry.path());
        }
        std::sort(identity_dirs.begin(), identity_dirs.end());
        for (const fs::path& identity_dir : identity_dirs) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(identity_dir)) {
                if (entry.is_regular_file() && has_image_extension(entry.path())) {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const fs::path& file : files) {
                const std::string relative = fs::relative(file, manifest.root).string();
                try {
                    const ImagePlane image = load_image(file);
                    (void)image;
                } catch (const Error&) {
                    manifest.exclusions.push_back(relative);
                    continue;
                }
                manifest.entries.push_back(
                    {make_identity(identity_dir.filename().string()), file, role});
            }
        }
    }
    if (manifest.entries.empty()) {
        raise(ErrorKind::DatasetTooSmall, "ingestion",
              "no decodable images under " + root.string());
    }

    // Probe identities must be disjoint from distractor identities.
    std::set<std::string> probe_ids, distractor_ids;
    for (const ManifestEntry& e : manifest.entries) {
        if (e.role == DatasetRole::Probe) probe_ids.insert(e.identity.value);
        if (e.role == DatasetRole::Distractor) distractor_ids.insert(e.identity.value);
    }
    for (const std::string& id : probe_ids) {
        if (distractor_ids.count(id)) {
            raise(ErrorKind::InvariantViolation, "ingestion",
                  "identity '" + id + "' appears as both probe and distractor");
        }
    }

    // Checksum over (relative path, bytes) in manifest order plus exclusions:
    // a pure function of the directory contents.
    Sha256 digest;
    for (const ManifestEntry& e : manifest.entries) {
        const std::string relative = fs::relative(e.path, manifest.root).string();
        digest.update(relative.data(), relative.size());
        const auto bytes = read_file_bytes(e.path);
        digest.update(bytes.data(), bytes.size());
    }
    for (const std::string& e : manifest.exclusions) digest.update(e.data(), e.size());
    manifest.checksum = digest.hex_digest();
    return manifest;
}

void DatasetManifest::write_json(const fs::path& path) const {
    nlohmann::ordered_json doc;
    doc["root"] = root.string();
    doc["checksum"] = checksum;
    doc["entries"] = nlohmann::ordered_json::array();
    for (const ManifestEntry& e : entries) {
        doc["entries"].push_back({{"identity", e.identity.value},
                                  {"path", fs::relative(e.path, root).string()},
                                  {"role", to_string(e.role)}});
    }
    doc["exclusions"] = exclusions;
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        raise(ErrorKind::Io, "ingestion", "cannot write manifest: " + path.string());
    }
    out << doc.dump(2) << "\n";
}

void ProbeGallerySplit::validate() const {
    if (probes.empty()) {
        raise(ErrorKind::DatasetTooSmall, "eval", "probe set is empty");
    }
    std::set<std::string> gallery_ids;
    for (const LabeledImage& g : gallery) gallery_ids.insert(g.label.value);
    for (const LabeledImage& p : probes) {
        auto it = injectable.find(p.label.value);
        if (it == injectable.end() || it->second.empty()) {
            raise(ErrorKind::InvariantViolation, "eval",
                  "probe identity '" + p.label.value + "' has no injectable gallery images");
        }
        if (gallery_ids.count(p.label.value)) {
            raise(ErrorKind::InvariantViolation, "eval",
                  "probe identity '" + p.label.value + "' already present in the fixed gallery");
        }
    }
}

ProbeGallerySplit build_split(const DatasetManifest& manifest, int probe_per_identity,
                              std::optional<std::pair<int, int>> target_shape) {
    if (probe_per_identity < 1) {
        raise(ErrorKind::ConfigInvalid, "ingestion", "probe_per_identity must be at least 1");
    }
    auto load = [&](const fs::path& path) {
        ImagePlane image = load_image(path);
        if (target_shape &&
            (image.height() != target_shape->first || image.width() != target_shape->second)) {
            return resize_and_center(image, target_shape->first, target_shape->second);
        }
        return image;
    };

    ProbeGallerySplit split;
    std::map<std::string, std::vector<const ManifestEntry*>> probe_groups;
    for (const ManifestEntry& e : manifest.entries) {
        switch (e.role) {
            case DatasetRole::Probe:
                probe_groups[e.identity.value].push_back(&e);
                break;
            case DatasetRole::Gallery:
            case DatasetRole::Distractor:
                split.gallery.push_back({e.identity, load(e.path)});
                break;
        }
    }
    if (probe_groups.empty()) {
        raise(ErrorKind::DatasetTooSmall, "ingestion", "dataset has no probe identities");
    }
    for (const auto& [identity, entries] : probe_groups) {
        if (static_cast<int>(entries.size()) <= probe_per_identity) {
            raise(ErrorKind::DatasetTooSmall, "ingestion",
                  "identity '" + identity + "' has " + std::to_string(entries.size()) +
                      " images; needs more than " + std::to_string(probe_per_identity));
        }
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i < static_cast<std::size_t>(probe_per_identity)) {
                split.probes.push_back({entries[i]->identity, load(entries[i]->path)});
            } else {
                split.injectable[identity].push_back(load(entries[i]->path));
            }
        }
    }
    split.validate();
    return split;
}

ImagePlane resize_and_center(const ImagePlane& image, int target_height, int target_width) {
    if (target_height < ImagePlane::kMinSide || target_width < ImagePlane::kMinSide) {
        raise(ErrorKind::OutOfRange, "ingestion",
              "resize target below minimum " + std::to_string(ImagePlane::kMinSide));
    }
    if (image.height() == target_height && image.width() == target_width) {
        return image;
    }
    // Scale so the resized image covers the target, then center-crop.
    const double scale = std::max(static_cast<double>(target_height) / image.height(),
                                  static_cast<double>(target_width) / image.width());
    const int resized_h = std::max(target_height, static_cast<int>(std::lround(image.height() * scale)));
    const int resized_w = std::max(target_width, static_cast<int>(std::lround(image.width() * scale)));

    // Bilinear sampling on pixel centers, edge-clamped.
    std::vector<double> resized(static_cast<std::size_t>(resized_h) * resized_w * 3);
    const double sy_ratio = static_cast<double>(image.height()) / resized_h;
    const double sx_ratio = static_cast<double>(image.width()) / resized_w;
    for (int y = 0; y < resized_h; ++y) {
        const double sy = std::clamp((y + 0.5) * sy_ratio - 0.5, 0.0,
                                     static_cast<double>(image.height() - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, image.height() - 1);
        const double fy = sy - y0;
        for (int x = 0; x < resized_w; ++x) {
            const double sx = std::clamp((x + 0.5) * sx_ratio - 0.5, 0.0,
                                         static_cast<double>(image.width() - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, image.width() - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double v = (1.0 - fy) * ((1.0 - fx) * image.at(y0, x0, c) +
                                               fx * image.at(y0, x1, c)) +
                                 fy * ((1.0 - fx) * image.at(y1, x0, c) + fx * image.at(y1, x1, c));
                resized[(static_cast<std::size_t>(y) * resized_w + x) * 3 + c] = v;
            }
        }
    }

    const int off_y = (resized_h - target_height) / 2;
    const int off_x = (resized_w - target_width) / 2;
    std::vector<double> out(plane_size(target_height, target_width));
    for (int y = 0; y < target_height; ++y) {
        for (int x = 0; x < target_width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = resized[(static_cast<std::size_t>(y + off_y) * resized_w + (x + off_x)) *
                                       3 +
                                   c];
                out[(static_cast<std::size_t>(y) * target_width + x) * 3 + c] =
                    std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return ImagePlane(target_height, target_width, std::move(out));
}

}  // namespace facecloak
