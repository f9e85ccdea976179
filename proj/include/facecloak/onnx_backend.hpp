#pragma once

#include <filesystem>
#include <memory>

#include "facecloak/backend.hpp"

namespace facecloak {

// Exported-model adapter. Accepts ONNX inference graphs with one image input
// (NCHW or NHWC, fixed spatial dims) and one embedding output, restricted to
// a small operator subset: Conv (group 1), Relu, Sigmoid, Add, Mul,
// GlobalAveragePool, Flatten, Gemm, MatMul, Identity.
//
// Loaded models serve as evaluation targets only (the transfer setting): the
// descriptor reports differentiable = false and input_gradient raises a
// capability error. embed() L2-normalizes the graph output.
std::unique_ptr<Backend> load_exported_backend(const std::filesystem::path& path);

}  // namespace facecloak
