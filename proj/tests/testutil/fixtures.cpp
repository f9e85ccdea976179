#include "testutil/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/rng.hpp"
#include "facecloak/synthgen.hpp"

namespace facecloak::testutil {

namespace {

struct FaceParams {
    double skin[3];
    double hair[3];
    double bg_top[3];
    double bg_bottom[3];
    double face_rx, face_ry;        // fractions of width/height
    double eye_dx, eye_y, eye_r;    // fractions
    double iris[3];
    double brow_dy, brow_thick, brow_dark;
    double nose_w, nose_len, nose_shade;
    double mouth_y, mouth_w, mouth_h;
    double mouth_color[3];
    double mole_x[2], mole_y[2];    // fractions inside the face
    double stripe_freq, stripe_amp, stripe_angle;
    double hair_top;                // fraction of height where hair starts
};

FaceParams draw_params(Rng& rng, double spread) {
    // Uniform in [mid − spread·half, mid + spread·half] of each range.
    auto U = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo) * spread;
        return rng.uniform(mid - half, mid + half);
    };
    FaceParams p{};
    p.skin[0] = U(0.45, 0.9);
    p.skin[1] = p.skin[0] * U(0.72, 0.95);
    p.skin[2] = p.skin[1] * U(0.7, 0.95);
    for (double& c : p.hair) c = U(0.05, 0.55);
    for (double& c : p.bg_top) c = U(0.2, 0.85);
    for (double& c : p.bg_bottom) c = U(0.2, 0.85);
    p.face_rx = U(0.26, 0.36);
    p.face_ry = U(0.34, 0.44);
    p.eye_dx = U(0.13, 0.2);
    p.eye_y = U(0.37, 0.44);
    p.eye_r = U(0.035, 0.06);
    for (double& c : p.iris) c = U(0.05, 0.5);
    p.brow_dy = U(0.06, 0.1);
    p.brow_thick = U(0.012, 0.03);
    p.brow_dark = U(0.1, 0.5);
    p.nose_w = U(0.04, 0.09);
    p.nose_len = U(0.12, 0.2);
    p.nose_shade = U(0.6, 0.85);
    p.mouth_y = U(0.72, 0.8);
    p.mouth_w = U(0.1, 0.17);
    p.mouth_h = U(0.02, 0.045);
    p.mouth_color[0] = U(0.45, 0.85);
    p.mouth_color[1] = U(0.1, 0.35);
    p.mouth_color[2] = U(0.15, 0.4);
    for (int m = 0; m < 2; ++m) {
        p.mole_x[m] = U(0.3, 0.7);
        p.mole_y[m] = U(0.45, 0.7);
    }
    p.stripe_freq = U(3.0, 9.0);
    p.stripe_amp = U(0.02, 0.06);
    p.stripe_angle = U(0.0, 3.14159);
    p.hair_top = U(0.04, 0.12);
    return p;
}

inline double smooth_step(double signed_distance, double softness) {
    // 1 inside (negative distance), 0 outside, linear ramp of `softness`.
    return std::clamp(0.5 - signed_distance / softness, 0.0, 1.0);
}

void blend(double* px, const double* color, double alpha) {
    for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - alpha) + color[c] * alpha;
}

}  // namespace

std::string identity_name(int identity_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%03d", identity_index);
    return buf;
}

ImagePlane render_identity_face(int height, int width, std::uint64_t corpus_seed,
                                int identity_index, double spread) {
    Rng rng = Rng(corpus_seed).fork(static_cast<std::uint64_t>(identity_index));
    const FaceParams p = draw_params(rng, spread);

    const double cx = 0.5 * width;
    const double cy = 0.52 * height;
    const double rx = p.face_rx * width;
    const double ry = p.face_ry * height;
    const double soft = 1.5;  // pixels of edge feathering

    std::vector<double> data(plane_size(height, width));
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double* px = &data[(static_cast<std::size_t>(y) * width + x) * 3];
            const double v = static_cast<double>(y) / height;

            // Background: vertical gradient plus an oriented sinusoid for
            // local texture.
            const double stripes =
                p.stripe_amp * std::sin(p.stripe_freq * 2.0 * 3.14159265 *
                                        (x * std::cos(p.stripe_angle) +
                                         y * std::sin(p.stripe_angle)) /
                                        width);
            for (int c = 0; c < 3; ++c) {
                px[c] = p.bg_top[c] * (1.0 - v) + p.bg_bottom[c] * v + stripes;
            }

            // Hair: a cap above/around the upper face.
            const double hair_rx = rx * 1.18;
            const double hair_ry = ry * 1.22;
            const double hd = std::sqrt(((x - cx) / hair_rx) * ((x - cx) / hair_rx) +
                                        ((y - cy * 0.92) / hair_ry) * ((y - cy * 0.92) / hair_ry));
            if (y >= p.hair_top * height) {
                blend(px, p.hair, smooth_step((hd - 1.0) * hair_ry, soft));
            }

            // Face ellipse.
            const double fd = std::sqrt(((x - cx) / rx) * ((x - cx) / rx) +
                                        ((y - cy) / ry) * ((y - cy) / ry));
            blend(px, p.skin, smooth_step((fd - 1.0) * std::min(rx, ry), soft));

            // Forehead keeps skin; hair reclaims the very top of the head.
            if (fd < 1.0 && y < (p.hair_top + 0.1) * height) {
                blend(px, p.hair, 0.85);
            }
        }
    }

    auto draw_ellipse = [&](double ex, double ey, double erx, double ery, const double* color,
                            double softness) {
        const int x0 = std::max(0, static_cast<int>(ex - erx - 2 * softness));
        const int x1 = std::min(width - 1, static_cast<int>(ex + erx + 2 * softness));
        const int y0 = std::max(0, static_cast<int>(ey - ery - 2 * softness));
        const int y1 = std::min(height - 1, static_cast<int>(ey + ery + 2 * softness));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d = std::sqrt(((x - ex) / erx) * ((x - ex) / erx) +
                                           ((y - ey) / ery) * ((y - ey) / ery));
                const double alpha = smooth_step((d - 1.0) * std::min(erx, ery), softness);
                if (alpha > 0.0) {
                    blend(&data[(static_cast<std::size_t>(y) * width + x) * 3], color, alpha);
                }
            }
        }
    };

    const double white[3] = {0.93, 0.93, 0.9};
    const double dark[3] = {0.05, 0.05, 0.08};
    const double brow[3] = {p.brow_dark * p.hair[0], p.brow_dark * p.hair[1],
                            p.brow_dark * p.hair[2]};
    const double nose_color[3] = {p.skin[0] * p.nose_shade, p.skin[1] * p.nose_shade,
                                  p.skin[2] * p.nose_shade};

    for (int side = -1; side <= 1; side += 2) {
        const double ex = cx + side * p.eye_dx * width;
        const double ey = p.eye_y * height;
        const double er = p.eye_r * width;
        draw_ellipse(ex, ey, er * 1.5, er, white, 1.0);                     // sclera
        draw_ellipse(ex, ey, er * 0.7, er * 0.7, p.iris, 0.8);              // iris
        draw_ellipse(ex, ey, er * 0.3, er * 0.3, dark, 0.6);                // pupil
        draw_ellipse(ex, ey - p.brow_dy * height, er * 1.6,
                     p.brow_thick * height + 0.8, brow, 0.8);               // brow
    }
    draw_ellipse(cx, cy + 0.02 * height, p.nose_w * width, p.nose_len * height * 0.5, nose_color,
                 1.2);
    draw_ellipse(cx, p.mouth_y * height, p.mouth_w * width, p.mouth_h * height + 0.6,
                 p.mouth_color, 0.9);
    for (int m = 0; m < 2; ++m) {
        const double mx = cx + (p.mole_x[m] - 0.5) * 2.0 * rx * 0.8;
        const double my = cy + (p.mole_y[m] - 0.575) * 2.0 * ry * 0.8;
        draw_ellipse(mx, my, 1.2, 1.2, dark, 0.6);
    }

    for (double& v : data) v = std::clamp(v, 0.0, 1.0);
    return ImagePlane(height, width, std::move(data));
}

ImagePlane render_face_image(int height, int width, std::uint64_t corpus_seed, int identity_index,
                             int image_index, double spread) {
    const ImagePlane canonical =
        render_identity_face(height, width, corpus_seed, identity_index, spread);
    Rng rng = Rng(corpus_seed)
                  .fork(static_cast<std::uint64_t>(identity_index))
                  .fork(0xfaceu + static_cast<std::uint64_t>(image_index));
    AugmentParams jitter;
    jitter.horizontal_flip = false;  // identities keep their chirality
    jitter.rotation_deg = rng.uniform(-4.0, 4.0);
    jitter.scale = rng.uniform(0.96, 1.04);
    jitter.brightness = rng.uniform(-0.06, 0.06);
    jitter.contrast = rng.uniform(0.93, 1.07);
    jitter.noise_sigma = 0.008;
    jitter.noise_seed = rng.next_u64();
    return augment_once(canonical, jitter);
}

std::vector<LabeledImage> build_toy_corpus(int n_identities, int images_per_identity, int height,
                                           int width, std::uint64_t corpus_seed) {
    std::vector<LabeledImage> corpus;
    corpus.reserve(static_cast<std::size_t>(n_identities) * images_per_identity);
    for (int id = 0; id < n_identities; ++id) {
        for (int img = 0; img < images_per_identity; ++img) {
            corpus.push_back({make_identity(identity_name(id)),
                              render_face_image(height, width, corpus_seed, id, img)});
        }
    }
    return corpus;
}

void write_corpus_tree(const std::filesystem::path& root, int n_probe_ids,
                       int images_per_identity, int n_distractor_ids, int images_per_distractor,
                       int height, int width, std::uint64_t corpus_seed) {
    namespace fs = std::filesystem;
    for (int id = 0; id < n_probe_ids; ++id) {
        const fs::path dir = root / "probe" / identity_name(id);
        fs::create_directories(dir);
        for (int img = 0; img < images_per_identity; ++img) {
            char name[16];
            std::snprintf(name, sizeof(name), "%02d.png", img);
            save_png(render_face_image(height, width, corpus_seed, id, img), dir / name);
        }
    }
    for (int d = 0; d < n_distractor_ids; ++d) {
        const int id = 1000 + d;  // disjoint identity range
        const fs::path dir = root / "distractor" / identity_name(id);
        fs::create_directories(dir);
        for (int img = 0; img < images_per_distractor; ++img) {
            char name[16];
            std::snprintf(name, sizeof(name), "%02d.png", img);
            save_png(render_face_image(height, width, corpus_seed, id, img), dir / name);
        }
    }
}

TempDir::TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    Rng rng(std::random_device{}());
    for (int attempt = 0; attempt < 32; ++attempt) {
        char name[32];
        std::snprintf(name, sizeof(name), "facecloak_%016llx",
                      static_cast<unsigned long long>(rng.next_u64()));
        const auto candidate = base / name;
        std::error_code ec;
        if (std::filesystem::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    raise(ErrorKind::Io, "testutil", "cannot create scratch directory");
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

LinearBackend::LinearBackend(int height, int width, int dim, std::uint64_t seed) {
    descriptor_ = BackendDescriptor{"linear-test", height, width, dim, true};
    Rng rng(seed);
    weights_.resize(static_cast<std::size_t>(dim) * plane_size(height, width));
    for (double& w : weights_) w = rng.normal();
}

std::vector<double> LinearBackend::raw_feature(const ImagePlane& image) const {
    const std::size_t n = image.size();
    std::vector<double> f(static_cast<std::size_t>(descriptor_.embedding_dim), 0.0);
    for (int d = 0; d < descriptor_.embedding_dim; ++d) {
        const double* row = &weights_[static_cast<std::size_t>(d) * n];
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * image.data()[i];
        f[static_cast<std::size_t>(d)] = acc;
    }
    return f;
}

Embedding LinearBackend::embed(const ImagePlane& image) const {
    check_input_shape(image);
    return Embedding(l2_normalized(raw_feature(image)));
}

std::vector<double> LinearBackend::input_gradient(const ImagePlane& image,
                                                  const EmbeddingObjective& objective) const {
    check_input_shape(image);
    std::vector<double> f = raw_feature(image);
    double norm_sq = 0.0;
    for (double v : f) norm_sq += v * v;
    const double norm = std::max(std::sqrt(norm_sq), 1e-12);
    std::vector<double> e(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) e[i] = f[i] / norm;

    const std::vector<double> g = objective.gradient(Embedding(e));
    // d_f = (g − ê⟨ê,g⟩)/‖f‖, then back through the matrix.
    double dot = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) dot += e[i] * g[i];
    std::vector<double> d_f(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) d_f[i] = (g[i] - e[i] * dot) / norm;

    const std::size_t n = image.size();
    std::vector<double> d_input(n, 0.0);
    for (int d = 0; d < descriptor_.embedding_dim; ++d) {
        const double* row = &weights_[static_cast<std::size_t>(d) * n];
        const double gd = d_f[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < n; ++i) d_input[i] += gd * row[i];
    }
    return d_input;
}

}  // namespace facecloak::testutil
