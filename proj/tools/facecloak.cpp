#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "facecloak/commands.hpp"
#include "facecloak/error.hpp"

namespace {

using facecloak::RunConfig;

struct Overrides {
    std::optional<double> eps;
    std::optional<double> eps_boosted;
    std::optional<double> step;
    std::optional<int> iterations;
    std::optional<int> num_variants;
    std::optional<std::uint64_t> rng_seed;
    std::optional<int> jobs;
    std::optional<std::string> output_dir;
    std::optional<std::string> dataset_root;
};

RunConfig resolve_config(const std::string& config_path, const Overrides& o) {
    RunConfig cfg;
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("FACECLOAK_CONFIG")) path = env;
    }
    if (!path.empty()) {
        cfg = facecloak::load_run_config(path);
    }
    if (o.eps) cfg.optimizer.eps = *o.eps;
    if (o.eps_boosted) cfg.optimizer.eps_boosted = *o.eps_boosted;
    if (o.step) cfg.optimizer.step = *o.step;
    if (o.iterations) cfg.optimizer.iterations = *o.iterations;
    if (o.num_variants) cfg.optimizer.n_variants = *o.num_variants;
    if (o.rng_seed) {
        cfg.rng_seed = *o.rng_seed;
        cfg.optimizer.rng_seed = *o.rng_seed;
    }
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.dataset_root) cfg.dataset_root = *o.dataset_root;
    return cfg;
}

std::optional<double> parse_real_flag(const std::string& text, const char* name) {
    if (text.empty()) return std::nullopt;
    return facecloak::parse_real(nlohmann::ordered_json(text), name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facecloak — identity-specific face cloaking"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path,
                   "TOML config file (falls back to $FACECLOAK_CONFIG)");

    Overrides overrides;
    std::string eps_text, eps_boosted_text, step_text;
    app.add_option("--eps", eps_text, "perturbation budget (number or a/b fraction)");
    app.add_option("--eps-boosted", eps_boosted_text, "boosted budget inside focus regions");
    app.add_option("--step", step_text, "sign-gradient step size");
    int iterations = -1, num_variants = -1, jobs = -1;
    app.add_option("--iterations", iterations, "optimization iterations");
    app.add_option("--num-variants", num_variants, "synthetic variants per identity");
    app.add_option("--jobs", jobs, "parallel workers for per-identity stages");
    std::string rng_seed_text, output_dir, dataset_root;
    app.add_option("--seed", rng_seed_text, "rng seed");
    app.add_option("--output", output_dir, "output directory");
    app.add_option("--dataset", dataset_root, "dataset root directory");

    auto* generate = app.add_subcommand("generate", "optimize a cloak from a seed image");
    std::vector<std::string> seed_paths;
    generate->add_option("seeds", seed_paths, "seed image path(s)")->required();

    auto* apply = app.add_subcommand("apply", "add a cloak to images");
    std::string cloak_path, apply_out = "protected";
    std::vector<std::string> apply_images;
    apply->add_option("--cloak", cloak_path, "cloak container path")->required();
    apply->add_option("images", apply_images, "image path(s)")->required();
    apply->add_option("--out", apply_out, "output directory");

    auto* eval = app.add_subcommand("eval", "run the identification/verification protocol");
    std::string eval_cloaks_dir;
    bool zero_cloak = false;
    eval->add_option("--cloaks", eval_cloaks_dir, "directory of <identity>.fclk cloaks");
    eval->add_flag("--zero-cloak", zero_cloak, "evaluate the uncloaked baseline");

    auto* ablate = app.add_subcommand("ablate", "sweep one hyperparameter axis");
    std::string axis;
    std::vector<std::string> axis_values;
    ablate->add_option("--axis", axis, "eps | iterations | n_variants")->required();
    ablate->add_option("values", axis_values, "axis values (eps accepts a/b fractions)")
        ->required();

    auto* inspect = app.add_subcommand("inspect", "print a cloak header without its payload");
    std::string inspect_path;
    inspect->add_option("cloak", inspect_path, "cloak container path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        overrides.eps = parse_real_flag(eps_text, "--eps");
        overrides.eps_boosted = parse_real_flag(eps_boosted_text, "--eps-boosted");
        overrides.step = parse_real_flag(step_text, "--step");
        if (iterations >= 0) overrides.iterations = iterations;
        if (num_variants >= 0) overrides.num_variants = num_variants;
        if (jobs >= 0) overrides.jobs = jobs;
        if (!rng_seed_text.empty()) overrides.rng_seed = std::stoull(rng_seed_text);
        if (!output_dir.empty()) overrides.output_dir = output_dir;
        if (!dataset_root.empty()) overrides.dataset_root = dataset_root;

        if (inspect->parsed()) {
            return facecloak::cmd_inspect(inspect_path, std::cout);
        }
        if (apply->parsed()) {
            std::vector<std::filesystem::path> images(apply_images.begin(), apply_images.end());
            return facecloak::cmd_apply(cloak_path, images, apply_out, std::cout);
        }

        const RunConfig config = resolve_config(config_path, overrides);
        if (generate->parsed()) {
            std::vector<std::filesystem::path> seeds(seed_paths.begin(), seed_paths.end());
            return facecloak::cmd_generate(config, seeds, std::cout);
        }
        if (eval->parsed()) {
            const auto source = zero_cloak ? facecloak::EvalCloakSource::Zero
                                : !eval_cloaks_dir.empty()
                                    ? facecloak::EvalCloakSource::LoadDir
                                    : facecloak::EvalCloakSource::Generate;
            const auto dir = eval_cloaks_dir.empty()
                                 ? std::nullopt
                                 : std::optional<std::filesystem::path>(eval_cloaks_dir);
            return facecloak::cmd_eval(config, source, dir, std::cout);
        }
        if (ablate->parsed()) {
            return facecloak::cmd_ablate(config, axis, axis_values, std::cout);
        }
    } catch (const facecloak::Error& e) {
        std::cerr << R"({"stage":")" << e.stage() << R"(","kind":")"
                  << facecloak::to_string(e.kind()) << R"(","message":")" << e.what() << R"("})"
                  << "\n";
        return facecloak::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << R"({"stage":"cli","kind":"unexpected","message":")" << e.what() << R"("})"
                  << "\n";
        return 1;
    }
    return 0;
}
