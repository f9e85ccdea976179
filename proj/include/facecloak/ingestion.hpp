#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facecloak/image.hpp"
#include "facecloak/types.hpp"

namespace facecloak {

enum class DatasetRole { Probe, Gallery, Distractor };

const char* to_string(DatasetRole role);

struct ManifestEntry {
    IdentityLabel identity;
    std::filesystem::path path;  // absolute
    DatasetRole role;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;      // sorted by (role, identity, path)
    std::vector<std::string> exclusions;     // undecodable files, relative paths
    std::string checksum;                    // digest of (relative path, bytes) pairs

    void write_json(const std::filesystem::path& path) const;
};

// Walks root/{probe|gallery|distractor}/<identity>/<image>.{png,jpg,jpeg},
// validating that every image decodes at ≥ 16×16. Undecodable files are
// excluded and listed; the scan continues.
DatasetManifest scan_dataset(const std::filesystem::path& root);

// Identification-protocol split: probes, the permanent gallery (gallery +
// distractor roles), and the per-identity images injected next to each probe.
struct ProbeGallerySplit {
    std::vector<LabeledImage> probes;
    std::vector<LabeledImage> gallery;
    std::map<std::string, std::vector<ImagePlane>> injectable;  // by identity
    std::string injection_rule = "per-probe-temporary";

    void validate() const;
};

// First probe_per_identity images (sorted order) of each probe identity
// become probes; the remainder are injectable. Optionally resizes everything
// to target_height×target_width on load.
ProbeGallerySplit build_split(const DatasetManifest& manifest, int probe_per_identity,
                              std::optional<std::pair<int, int>> target_shape = std::nullopt);

// Aspect-preserving bilinear resize followed by a center crop.
ImagePlane resize_and_center(const ImagePlane& image, int target_height, int target_width);

}  // namespace facecloak
