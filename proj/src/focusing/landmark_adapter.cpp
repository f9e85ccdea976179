#include <string>

#include "httplib.h"
#include "json.hpp"

#include "facecloak/error.hpp"
#include "facecloak/focusing.hpp"
#include "facecloak/image_io.hpp"

namespace facecloak {

LandmarkSet detect_landmarks(const ImagePlane& image, LandmarkAdapter* adapter) {
    if (!adapter) {
        return canonical_landmarks(image.height(), image.width());
    }
    const std::optional<LandmarkSet> detected = adapter->detect(encode_png(image));
    if (!detected) {
        raise(ErrorKind::DetectionFailure, "focusing", "landmark adapter found no face");
    }
    validate_landmarks(*detected, image.height(), image.width());
    return *detected;
}

namespace {

class HttpLandmarkAdapter : public LandmarkAdapter {
public:
    explicit HttpLandmarkAdapter(HttpLandmarkOptions options) : options_(std::move(options)) {}

    std::optional<LandmarkSet> detect(const std::vector<std::uint8_t>& png_bytes) override {
        httplib::Client http(options_.host, options_.port);
        http.set_connection_timeout(options_.timeout_seconds, 0);
        http.set_read_timeout(options_.timeout_seconds, 0);
        auto res = http.Post(options_.path,
                             std::string(reinterpret_cast<const char*>(png_bytes.data()),
                                         png_bytes.size()),
                             "image/png");
        if (!res || res->status != 200) {
            raise(ErrorKind::DetectionFailure, "focusing",
                  "landmark service unreachable: " + options_.host + ":" +
                      std::to_string(options_.port));
        }
        nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(ErrorKind::DetectionFailure, "focusing", "malformed landmark response");
        }
        if (doc.contains("face") && doc["face"].is_boolean() && !doc["face"].get<bool>()) {
            return std::nullopt;
        }
        auto point = [&](const char* key) {
            if (!doc.contains(key) || !doc[key].is_array() || doc[key].size() != 2) {
                raise(ErrorKind::DetectionFailure, "focusing",
                      std::string("landmark response missing '") + key + "'");
            }
            return Point{doc[key][0].get<int>(), doc[key][1].get<int>()};
        };
        LandmarkSet lm;
        lm.left_eye = point("left_eye");
        lm.right_eye = point("right_eye");
        lm.nose = point("nose");
        lm.mouth = point("mouth");
        return lm;
    }

private:
    HttpLandmarkOptions options_;
};

}  // namespace

std::unique_ptr<LandmarkAdapter> make_http_landmark_adapter(const HttpLandmarkOptions& options) {
    return std::make_unique<HttpLandmarkAdapter>(options);
}

}  // namespace facecloak
