#include "facecloak/backend.hpp"

#include "facecloak/error.hpp"

namespace facecloak {

double LinearObjective::value(const Embedding& e) const {
    double acc = 0.0;
    for (int i = 0; i < e.dim(); ++i) acc += e[i] * direction_[i];
    return acc;
}

std::vector<double> LinearObjective::gradient(const Embedding&) const { return direction_; }

std::vector<double> Backend::input_gradient(const ImagePlane&, const EmbeddingObjective&) const {
    raise(ErrorKind::Capability, "backends",
          "backend '" + descriptor().backend_id + "' does not expose input gradients");
}

void Backend::check_input_shape(const ImagePlane& image) const {
    const BackendDescriptor& d = descriptor();
    if (image.height() != d.input_height || image.width() != d.input_width) {
        raise(ErrorKind::ShapeMismatch, "backends",
              "backend '" + d.backend_id + "' expects " + std::to_string(d.input_height) + "×" +
                  std::to_string(d.input_width) + " input, got " + std::to_string(image.height()) +
                  "×" + std::to_string(image.width()));
    }
}

}  // namespace facecloak
