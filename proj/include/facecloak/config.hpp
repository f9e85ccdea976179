#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "facecloak/backend.hpp"
#include "facecloak/optimizer.hpp"
#include "facecloak/synthgen.hpp"
#include "facecloak/transforms.hpp"

namespace facecloak {

struct BackendConfig {
    std::string kind = "toy";  // "toy" | "onnx"
    std::filesystem::path weights_path;
    std::string backend_id = "toy";
    // Toy training fallback (no separate train subcommand).
    bool train_if_missing = false;
    int input_height = 32;
    int input_width = 32;
    int train_epochs = 30;
    int train_holdout = 2;
    double train_learning_rate = 3e-3;
};

struct SynthgenConfig {
    GeneratorKind kind = GeneratorKind::Augmentation;
    HttpGeneratorOptions http;  // external generator only
};

struct EvalConfig {
    std::vector<int> top_n = {1, 5};
    bool verification = false;
    double target_far = 0.01;
    std::vector<TransformSpec> transforms;
};

// Everything one run needs; validated before any work starts, and hashed into
// the config digest that every produced artifact embeds.
struct RunConfig {
    BackendConfig backend;
    OptimizerConfig optimizer;
    SynthgenConfig synthgen;
    EvalConfig eval;
    std::filesystem::path dataset_root;
    int probe_per_identity = 5;
    std::filesystem::path output_dir = "out";
    std::uint64_t rng_seed = 1;
    int jobs = 1;

    void validate() const;
    // Canonical JSON of the functional fields (output_dir excluded).
    nlohmann::ordered_json to_canonical_json() const;
    std::string digest() const;
};

// Parses the TOML document; unknown keys are rejected so typos fail loudly.
RunConfig run_config_from_toml(const nlohmann::ordered_json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Accepts a JSON number or an "a/b" fraction string (budgets are written as
// fractions of 255 throughout).
double parse_real(const nlohmann::ordered_json& value, const std::string& context);

}  // namespace facecloak
