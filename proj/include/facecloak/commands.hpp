#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "facecloak/config.hpp"
#include "facecloak/error.hpp"

namespace facecloak {

// Exit codes: 0 success, 2 config error, 3 data error, 4 backend error,
// 5 partial failure.
int exit_code_for(ErrorKind kind);

// synthgen → anchors → optimize → save, one cloak per seed image.
int cmd_generate(const RunConfig& config, const std::vector<std::filesystem::path>& seed_paths,
                 std::ostream& out);

// Applies a persisted cloak to images; mismatched inputs are reported and the
// rest continue (exit 5 on partial failure).
int cmd_apply(const std::filesystem::path& cloak_path,
              const std::vector<std::filesystem::path>& image_paths,
              const std::filesystem::path& output_dir, std::ostream& out);

enum class EvalCloakSource { Generate, LoadDir, Zero };

int cmd_eval(const RunConfig& config, EvalCloakSource source,
             const std::optional<std::filesystem::path>& cloaks_dir, std::ostream& out);

int cmd_ablate(const RunConfig& config, const std::string& axis,
               const std::vector<std::string>& values, std::ostream& out);

// Prints the container header without touching the payload.
int cmd_inspect(const std::filesystem::path& cloak_path, std::ostream& out);

}  // namespace facecloak
