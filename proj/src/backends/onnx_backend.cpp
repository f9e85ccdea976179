#include "facecloak/onnx_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facecloak/error.hpp"
#include "facecloak/image_io.hpp"

namespace facecloak {

namespace {

// ---------------------------------------------------------------------------
// Protobuf wire-format reader (the subset ModelProto needs).

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    bool done() const { return pos >= size; }

    std::uint64_t varint() {
        std::uint64_t value = 0;
        int shift = 0;
        while (true) {
            if (pos >= size || shift > 63) {
                raise(ErrorKind::Format, "backends", "truncated varint in ONNX stream");
            }
            const std::uint8_t byte = data[pos++];
            value |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
            if ((byte & 0x80) == 0) break;
            shift += 7;
        }
        return value;
    }

    Reader slice(std::size_t len) {
        if (pos + len > size) {
            raise(ErrorKind::Format, "backends", "truncated length-delimited field in ONNX stream");
        }
        Reader r{data + pos, len, 0};
        pos += len;
        return r;
    }

    std::string bytes(std::size_t len) {
        if (pos + len > size) {
            raise(ErrorKind::Format, "backends", "truncated bytes field in ONNX stream");
        }
        std::string out(reinterpret_cast<const char*>(data + pos), len);
        pos += len;
        return out;
    }

    void skip(int wire_type, std::size_t line_tag) {
        switch (wire_type) {
            case 0: varint(); break;
            case 1:
                if (pos + 8 > size) raise(ErrorKind::Format, "backends", "truncated fixed64");
                pos += 8;
                break;
            case 2: {
                const std::uint64_t len = varint();
                if (pos + len > size) raise(ErrorKind::Format, "backends", "truncated field");
                pos += len;
                break;
            }
            case 5:
                if (pos + 4 > size) raise(ErrorKind::Format, "backends", "truncated fixed32");
                pos += 4;
                break;
            default:
                raise(ErrorKind::Format, "backends",
                      "unsupported wire type " + std::to_string(wire_type) + " for field " +
                          std::to_string(line_tag));
        }
    }
};

struct TensorProto {
    std::string name;
    std::vector<std::int64_t> dims;
    int data_type = 0;  // 1 = float, 7 = int64
    std::vector<double> values;
};

struct AttributeProto {
    std::string name;
    std::int64_t i = 0;
    double f = 0.0;
    std::vector<std::int64_t> ints;
};

struct NodeProto {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string op_type;
    std::vector<AttributeProto> attributes;

    std::optional<AttributeProto> attr(const std::string& name) const {
        for (const AttributeProto& a : attributes) {
            if (a.name == name) return a;
        }
        return std::nullopt;
    }
};

struct ValueInfo {
    std::string name;
    std::vector<std::int64_t> dims;  // 0 for unknown/symbolic
};

struct GraphProto {
    std::vector<NodeProto> nodes;
    std::vector<TensorProto> initializers;
    std::vector<ValueInfo> inputs;
    std::vector<ValueInfo> outputs;
};

TensorProto parse_tensor(Reader r) {
    TensorProto t;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 1 && wire == 0) {
            t.dims.push_back(static_cast<std::int64_t>(r.varint()));
        } else if (field == 1 && wire == 2) {  // packed dims
            Reader packed = r.slice(r.varint());
            while (!packed.done()) t.dims.push_back(static_cast<std::int64_t>(packed.varint()));
        } else if (field == 2 && wire == 0) {
            t.data_type = static_cast<int>(r.varint());
        } else if (field == 4 && wire == 2) {  // packed float_data
            Reader packed = r.slice(r.varint());
            while (packed.pos + 4 <= packed.size) {
                float f;
                std::memcpy(&f, packed.data + packed.pos, 4);
                packed.pos += 4;
                t.values.push_back(f);
            }
        } else if (field == 4 && wire == 5) {
            const std::string raw = r.bytes(4);
            float f;
            std::memcpy(&f, raw.data(), 4);
            t.values.push_back(f);
        } else if (field == 7 && wire == 2) {  // packed int64_data
            Reader packed = r.slice(r.varint());
            while (!packed.done()) t.values.push_back(static_cast<double>(
                static_cast<std::int64_t>(packed.varint())));
        } else if (field == 8 && wire == 2) {
            t.name = r.bytes(r.varint());
        } else if (field == 9 && wire == 2) {  // raw_data
            const std::string raw = r.bytes(r.varint());
            if (t.data_type == 1) {
                for (std::size_t i = 0; i + 4 <= raw.size(); i += 4) {
                    float f;
                    std::memcpy(&f, raw.data() + i, 4);
                    t.values.push_back(f);
                }
            } else if (t.data_type == 7) {
                for (std::size_t i = 0; i + 8 <= raw.size(); i += 8) {
                    std::int64_t v;
                    std::memcpy(&v, raw.data() + i, 8);
                    t.values.push_back(static_cast<double>(v));
                }
            } else if (t.data_type == 11) {  // double
                for (std::size_t i = 0; i + 8 <= raw.size(); i += 8) {
                    double v;
                    std::memcpy(&v, raw.data() + i, 8);
                    t.values.push_back(v);
                }
            }
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    return t;
}

AttributeProto parse_attribute(Reader r) {
    AttributeProto a;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 1 && wire == 2) {
            a.name = r.bytes(r.varint());
        } else if (field == 2 && wire == 5) {
            const std::string raw = r.bytes(4);
            float f;
            std::memcpy(&f, raw.data(), 4);
            a.f = f;
        } else if (field == 3 && wire == 0) {
            a.i = static_cast<std::int64_t>(r.varint());
        } else if (field == 8 && wire == 0) {
            a.ints.push_back(static_cast<std::int64_t>(r.varint()));
        } else if (field == 8 && wire == 2) {  // packed ints
            Reader packed = r.slice(r.varint());
            while (!packed.done()) a.ints.push_back(static_cast<std::int64_t>(packed.varint()));
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    return a;
}

NodeProto parse_node(Reader r) {
    NodeProto n;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 1 && wire == 2) {
            n.inputs.push_back(r.bytes(r.varint()));
        } else if (field == 2 && wire == 2) {
            n.outputs.push_back(r.bytes(r.varint()));
        } else if (field == 4 && wire == 2) {
            n.op_type = r.bytes(r.varint());
        } else if (field == 5 && wire == 2) {
            n.attributes.push_back(parse_attribute(r.slice(r.varint())));
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    return n;
}

ValueInfo parse_value_info(Reader r) {
    ValueInfo v;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 1 && wire == 2) {
            v.name = r.bytes(r.varint());
        } else if (field == 2 && wire == 2) {  // TypeProto
            Reader type = r.slice(r.varint());
            while (!type.done()) {
                const std::uint64_t ttag = type.varint();
                if ((ttag >> 3) == 1 && (ttag & 7) == 2) {  // tensor_type
                    Reader tensor = type.slice(type.varint());
                    while (!tensor.done()) {
                        const std::uint64_t ttag2 = tensor.varint();
                        if ((ttag2 >> 3) == 2 && (ttag2 & 7) == 2) {  // shape
                            Reader shape = tensor.slice(tensor.varint());
                            while (!shape.done()) {
                                const std::uint64_t stag = shape.varint();
                                if ((stag >> 3) == 1 && (stag & 7) == 2) {  // dim
                                    Reader dim = shape.slice(shape.varint());
                                    std::int64_t value = 0;
                                    while (!dim.done()) {
                                        const std::uint64_t dtag = dim.varint();
                                        if ((dtag >> 3) == 1 && (dtag & 7) == 0) {
                                            value = static_cast<std::int64_t>(dim.varint());
                                        } else {
                                            dim.skip(static_cast<int>(dtag & 7), dtag >> 3);
                                        }
                                    }
                                    v.dims.push_back(value);
                                } else {
                                    shape.skip(static_cast<int>(stag & 7), stag >> 3);
                                }
                            }
                        } else {
                            tensor.skip(static_cast<int>(ttag2 & 7), ttag2 >> 3);
                        }
                    }
                } else {
                    type.skip(static_cast<int>(ttag & 7), ttag >> 3);
                }
            }
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    return v;
}

GraphProto parse_graph(Reader r) {
    GraphProto g;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 1 && wire == 2) {
            g.nodes.push_back(parse_node(r.slice(r.varint())));
        } else if (field == 5 && wire == 2) {
            g.initializers.push_back(parse_tensor(r.slice(r.varint())));
        } else if (field == 11 && wire == 2) {
            g.inputs.push_back(parse_value_info(r.slice(r.varint())));
        } else if (field == 12 && wire == 2) {
            g.outputs.push_back(parse_value_info(r.slice(r.varint())));
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    return g;
}

GraphProto parse_model(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes.data(), bytes.size(), 0};
    std::optional<GraphProto> graph;
    while (!r.done()) {
        const std::uint64_t tag = r.varint();
        const int field = static_cast<int>(tag >> 3);
        const int wire = static_cast<int>(tag & 7);
        if (field == 7 && wire == 2) {
            graph = parse_graph(r.slice(r.varint()));
        } else {
            r.skip(wire, static_cast<std::size_t>(field));
        }
    }
    if (!graph) {
        raise(ErrorKind::Format, "backends", "ONNX model holds no graph");
    }
    return std::move(*graph);
}

// ---------------------------------------------------------------------------
// Restricted evaluator.

struct RuntimeTensor {
    std::vector<std::int64_t> dims;
    std::vector<double> data;

    std::size_t count() const {
        std::size_t n = 1;
        for (std::int64_t d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }
};

class OnnxBackend : public Backend {
public:
    OnnxBackend(GraphProto graph, std::string backend_id) : graph_(std::move(graph)) {
        for (const TensorProto& init : graph_.initializers) {
            initializers_[init.name] = RuntimeTensor{init.dims, init.values};
        }
        // The image input is the single graph input with no initializer.
        const ValueInfo* image_input = nullptr;
        for (const ValueInfo& input : graph_.inputs) {
            if (!initializers_.count(input.name)) {
                if (image_input) {
                    raise(ErrorKind::Format, "backends", "ONNX graph has multiple data inputs");
                }
                image_input = &input;
            }
        }
        if (!image_input || graph_.outputs.size() != 1) {
            raise(ErrorKind::Format, "backends",
                  "ONNX graph must declare one image input and one output");
        }
        input_name_ = image_input->name;
        output_name_ = graph_.outputs.front().name;

        const std::vector<std::int64_t>& dims = image_input->dims;
        if (dims.size() != 4) {
            raise(ErrorKind::Format, "backends",
                  "ONNX image input must be 4-D (N×C×H×W or N×H×W×C); shape metadata missing");
        }
        if (dims[1] == 3 && dims[2] > 0 && dims[3] > 0) {
            nchw_ = true;
            descriptor_.input_height = static_cast<int>(dims[2]);
            descriptor_.input_width = static_cast<int>(dims[3]);
        } else if (dims[3] == 3 && dims[1] > 0 && dims[2] > 0) {
            nchw_ = false;
            descriptor_.input_height = static_cast<int>(dims[1]);
            descriptor_.input_width = static_cast<int>(dims[2]);
        } else {
            raise(ErrorKind::Format, "backends",
                  "ONNX image input must carry 3 channels and fixed spatial dims");
        }

        const std::vector<std::int64_t>& out_dims = graph_.outputs.front().dims;
        if (out_dims.empty() || out_dims.back() < 2) {
            raise(ErrorKind::Format, "backends", "ONNX output embedding dim metadata missing");
        }
        descriptor_.embedding_dim = static_cast<int>(out_dims.back());
        descriptor_.backend_id = std::move(backend_id);
        descriptor_.differentiable = false;

        for (const NodeProto& node : graph_.nodes) {
            if (!kSupportedOps.count(node.op_type)) {
                raise(ErrorKind::Format, "backends",
                      "unsupported ONNX operator '" + node.op_type + "'");
            }
        }
    }

    const BackendDescriptor& descriptor() const override { return descriptor_; }

    Embedding embed(const ImagePlane& image) const override {
        check_input_shape(image);
        std::map<std::string, RuntimeTensor> values = initializers_;

        RuntimeTensor input;
        const int h = image.height(), w = image.width();
        if (nchw_) {
            input.dims = {1, 3, h, w};
            input.data.resize(image.size());
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                        input.data[(static_cast<std::size_t>(c) * h + y) * w + x] =
                            image.at(y, x, c);
                    }
                }
            }
        } else {
            input.dims = {1, h, w, 3};
            input.data = image.data();
        }
        values[input_name_] = std::move(input);

        for (const NodeProto& node : graph_.nodes) {
            run_node(node, values);
        }
        const auto it = values.find(output_name_);
        if (it == values.end()) {
            raise(ErrorKind::BackendFailure, "backends", "ONNX graph never produced its output");
        }
        std::vector<double> out = it->second.data;
        if (out.size() != static_cast<std::size_t>(descriptor_.embedding_dim)) {
            raise(ErrorKind::BackendFailure, "backends",
                  "ONNX output size does not match declared embedding dim");
        }
        for (double v : out) {
            if (!std::isfinite(v)) {
                raise(ErrorKind::BackendFailure, "backends", "non-finite ONNX activation");
            }
        }
        return Embedding(l2_normalized(std::move(out)));
    }

private:
    static const std::map<std::string, int> kSupportedOps;

    static const RuntimeTensor& get(const std::map<std::string, RuntimeTensor>& values,
                                    const std::string& name) {
        const auto it = values.find(name);
        if (it == values.end()) {
            raise(ErrorKind::BackendFailure, "backends", "ONNX tensor '" + name + "' undefined");
        }
        return it->second;
    }

    void run_node(const NodeProto& node, std::map<std::string, RuntimeTensor>& values) const {
        RuntimeTensor out;
        if (node.op_type == "Relu") {
            out = get(values, node.inputs.at(0));
            for (double& v : out.data) v = std::max(v, 0.0);
        } else if (node.op_type == "Sigmoid") {
            out = get(values, node.inputs.at(0));
            for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
        } else if (node.op_type == "Identity") {
            out = get(values, node.inputs.at(0));
        } else if (node.op_type == "Add" || node.op_type == "Mul") {
            const RuntimeTensor& a = get(values, node.inputs.at(0));
            const RuntimeTensor& b = get(values, node.inputs.at(1));
            out = a;
            if (a.data.size() == b.data.size()) {
                for (std::size_t i = 0; i < out.data.size(); ++i) {
                    out.data[i] = node.op_type == "Add" ? a.data[i] + b.data[i]
                                                        : a.data[i] * b.data[i];
                }
            } else if (b.data.size() >= 1 && a.data.size() % b.data.size() == 0) {
                // Trailing-axis broadcast (bias add).
                const std::size_t stride = b.data.size();
                for (std::size_t i = 0; i < out.data.size(); ++i) {
                    const double rhs = b.data[i % stride];
                    out.data[i] = node.op_type == "Add" ? a.data[i] + rhs : a.data[i] * rhs;
                }
            } else {
                raise(ErrorKind::BackendFailure, "backends", "unsupported broadcast in Add/Mul");
            }
        } else if (node.op_type == "Flatten") {
            out = get(values, node.inputs.at(0));
            const std::int64_t batch = out.dims.empty() ? 1 : out.dims.front();
            out.dims = {batch, static_cast<std::int64_t>(out.data.size()) / std::max<std::int64_t>(batch, 1)};
        } else if (node.op_type == "GlobalAveragePool") {
            const RuntimeTensor& in = get(values, node.inputs.at(0));
            if (in.dims.size() != 4) {
                raise(ErrorKind::BackendFailure, "backends", "GlobalAveragePool expects NCHW");
            }
            const std::int64_t channels = in.dims[1];
            const std::int64_t area = in.dims[2] * in.dims[3];
            out.dims = {in.dims[0], channels, 1, 1};
            out.data.assign(static_cast<std::size_t>(channels), 0.0);
            for (std::int64_t c = 0; c < channels; ++c) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < area; ++i) {
                    acc += in.data[static_cast<std::size_t>(c * area + i)];
                }
                out.data[static_cast<std::size_t>(c)] = acc / static_cast<double>(area);
            }
        } else if (node.op_type == "MatMul") {
            const RuntimeTensor& a = get(values, node.inputs.at(0));
            const RuntimeTensor& b = get(values, node.inputs.at(1));
            matmul(a, b, false, out);
        } else if (node.op_type == "Gemm") {
            const RuntimeTensor& a = get(values, node.inputs.at(0));
            const RuntimeTensor& b = get(values, node.inputs.at(1));
            const auto trans_b = node.attr("transB");
            matmul(a, b, trans_b && trans_b->i == 1, out);
            if (node.inputs.size() > 2) {
                const RuntimeTensor& bias = get(values, node.inputs.at(2));
                for (std::size_t i = 0; i < out.data.size(); ++i) {
                    out.data[i] += bias.data[i % bias.data.size()];
                }
            }
        } else if (node.op_type == "Conv") {
            conv(node, values, out);
        } else {
            raise(ErrorKind::Format, "backends", "unsupported ONNX operator '" + node.op_type + "'");
        }
        values[node.outputs.at(0)] = std::move(out);
    }

    static void matmul(const RuntimeTensor& a, const RuntimeTensor& b, bool trans_b,
                       RuntimeTensor& out) {
        if (a.dims.size() != 2 || b.dims.size() != 2) {
            raise(ErrorKind::BackendFailure, "backends", "MatMul/Gemm expects 2-D tensors");
        }
        const std::int64_t m = a.dims[0];
        const std::int64_t k = a.dims[1];
        const std::int64_t n = trans_b ? b.dims[0] : b.dims[1];
        const std::int64_t bk = trans_b ? b.dims[1] : b.dims[0];
        if (bk != k) {
            raise(ErrorKind::BackendFailure, "backends", "MatMul/Gemm inner dims disagree");
        }
        out.dims = {m, n};
        out.data.assign(static_cast<std::size_t>(m * n), 0.0);
        for (std::int64_t i = 0; i < m; ++i) {
            for (std::int64_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    const double bv = trans_b ? b.data[static_cast<std::size_t>(j * k + kk)]
                                              : b.data[static_cast<std::size_t>(kk * n + j)];
                    acc += a.data[static_cast<std::size_t>(i * k + kk)] * bv;
                }
                out.data[static_cast<std::size_t>(i * n + j)] = acc;
            }
        }
    }

    static void conv(const NodeProto& node, const std::map<std::string, RuntimeTensor>& values,
                     RuntimeTensor& out) {
        const RuntimeTensor& in = get(values, node.inputs.at(0));
        const RuntimeTensor& weight = get(values, node.inputs.at(1));
        const RuntimeTensor* bias = node.inputs.size() > 2 ? &get(values, node.inputs.at(2)) : nullptr;
        if (in.dims.size() != 4 || weight.dims.size() != 4) {
            raise(ErrorKind::BackendFailure, "backends", "Conv expects 4-D input and weights");
        }
        std::int64_t stride_h = 1, stride_w = 1;
        std::int64_t pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;
        if (const auto strides = node.attr("strides"); strides && strides->ints.size() == 2) {
            stride_h = strides->ints[0];
            stride_w = strides->ints[1];
        }
        if (const auto pads = node.attr("pads"); pads && pads->ints.size() == 4) {
            pad_top = pads->ints[0];
            pad_left = pads->ints[1];
            pad_bottom = pads->ints[2];
            pad_right = pads->ints[3];
        }
        if (const auto group = node.attr("group"); group && group->i != 1) {
            raise(ErrorKind::Format, "backends", "grouped Conv is not supported");
        }
        const std::int64_t in_c = in.dims[1], in_h = in.dims[2], in_w = in.dims[3];
        const std::int64_t out_c = weight.dims[0], k_h = weight.dims[2], k_w = weight.dims[3];
        if (weight.dims[1] != in_c) {
            raise(ErrorKind::BackendFailure, "backends", "Conv channel mismatch");
        }
        const std::int64_t out_h = (in_h + pad_top + pad_bottom - k_h) / stride_h + 1;
        const std::int64_t out_w = (in_w + pad_left + pad_right - k_w) / stride_w + 1;
        out.dims = {1, out_c, out_h, out_w};
        out.data.assign(static_cast<std::size_t>(out_c * out_h * out_w), 0.0);
        for (std::int64_t oc = 0; oc < out_c; ++oc) {
            for (std::int64_t oy = 0; oy < out_h; ++oy) {
                for (std::int64_t ox = 0; ox < out_w; ++ox) {
                    double acc = bias ? bias->data[static_cast<std::size_t>(oc)] : 0.0;
                    for (std::int64_t ic = 0; ic < in_c; ++ic) {
                        for (std::int64_t ky = 0; ky < k_h; ++ky) {
                            const std::int64_t iy = oy * stride_h + ky - pad_top;
                            if (iy < 0 || iy >= in_h) continue;
                            for (std::int64_t kx = 0; kx < k_w; ++kx) {
                                const std::int64_t ix = ox * stride_w + kx - pad_left;
                                if (ix < 0 || ix >= in_w) continue;
                                acc += in.data[static_cast<std::size_t>((ic * in_h + iy) * in_w +
                                                                        ix)] *
                                       weight.data[static_cast<std::size_t>(
                                           ((oc * in_c + ic) * k_h + ky) * k_w + kx)];
                            }
                        }
                    }
                    out.data[static_cast<std::size_t>((oc * out_h + oy) * out_w + ox)] = acc;
                }
            }
        }
    }

    GraphProto graph_;
    std::map<std::string, RuntimeTensor> initializers_;
    std::string input_name_;
    std::string output_name_;
    bool nchw_ = true;
    BackendDescriptor descriptor_;
};

const std::map<std::string, int> OnnxBackend::kSupportedOps = {
    {"Conv", 1},  {"Relu", 1},   {"Sigmoid", 1},           {"Add", 1},    {"Mul", 1},
    {"Gemm", 1},  {"MatMul", 1}, {"GlobalAveragePool", 1}, {"Flatten", 1}, {"Identity", 1},
};

}  // namespace

std::unique_ptr<Backend> load_exported_backend(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.empty()) {
        raise(ErrorKind::Format, "backends", "empty model file: " + path.string());
    }
    GraphProto graph = parse_model(bytes);
    return std::make_unique<OnnxBackend>(std::move(graph), "onnx:" + path.filename().string());
}

}  // namespace facecloak
