#include "ctgfm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace ctgfm::model {

namespace {

using nn::NodePtr;
using nn::Tensor;

}  // namespace

std::string head_type_name(HeadType h) {
    return h == HeadType::reconstruction ? "reconstruction" : "classification";
}

HeadType parse_head_type(const std::string& name) {
    if (name == "reconstruction") return HeadType::reconstruction;
    if (name == "classification") return HeadType::classification;
    throw std::runtime_error("unknown head type '" + name + "'");
}

std::size_t ModelConfig::n_patches() const {
    if (context_len < patch_len) {
        throw std::invalid_argument("ModelConfig: context_len < patch_len");
    }
    if (stride == 0) throw std::invalid_argument("ModelConfig: stride must be >= 1");
    return (context_len - patch_len) / stride + 1;
}

void ModelConfig::validate() const {
    if (patch_len == 0 || d_model == 0 || n_heads == 0 || ff_dim == 0) {
        throw std::invalid_argument("ModelConfig: zero dimension");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("ModelConfig: d_model not divisible by n_heads");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw std::invalid_argument("ModelConfig: dropout must be in [0, 1)");
    }
    n_patches();  // validates stride and L >= P
}

ModelConfig ModelConfig::tiny(HeadType head) {
    ModelConfig c;
    c.patch_len = 4;
    c.stride = 4;
    c.context_len = 24;  // 6 patches
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.ff_dim = 16;
    c.dropout = 0.2;
    c.head_type = head;
    return c;
}

namespace {

std::map<std::string, std::vector<std::size_t>> expected_shapes(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t P = cfg.patch_len;
    const std::size_t d = cfg.d_model;
    const std::size_t N = cfg.n_patches();

    std::map<std::string, std::vector<std::size_t>> out;
    out["embed.w_p"] = {P, d};
    out["embed.w_pos"] = {N, d};
    for (std::size_t i = 0; i < cfg.n_layers; ++i) {
        const std::string L = "layer" + std::to_string(i) + ".";
        for (const char* m : {"wq", "wk", "wv", "wo"}) out[L + "attn." + m] = {d, d};
        for (const char* b : {"bq", "bk", "bv", "bo"}) out[L + "attn." + b] = {d};
        out[L + "ff.w1"] = {d, cfg.ff_dim};
        out[L + "ff.b1"] = {cfg.ff_dim};
        out[L + "ff.w2"] = {cfg.ff_dim, d};
        out[L + "ff.b2"] = {d};
        for (const char* bn : {"bn1", "bn2"}) {
            out[L + bn + ".gamma"] = {d};
            out[L + bn + ".beta"] = {d};
            out[L + bn + ".running_mean"] = {d};
            out[L + bn + ".running_var"] = {d};
        }
    }
    if (cfg.head_type == HeadType::reconstruction) {
        out["head.recon.w"] = {2 * d, P};
        out["head.recon.b"] = {P};
    } else {
        out["head.cls.w"] = {2 * N * d, 2};
        out["head.cls.b"] = {2};
    }
    return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Per-tensor generator streams make each tensor's initialization independent
// of map iteration order and reusable when only the head is re-initialized.
Tensor init_tensor(const std::string& name, const std::vector<std::size_t>& shape,
                   std::uint64_t seed) {
    Tensor t(shape);
    const std::string leaf_name = name.substr(name.rfind('.') + 1);
    if (leaf_name == "gamma" || leaf_name == "running_var") {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0;
        return t;
    }
    if (leaf_name == "beta" || leaf_name == "running_mean" || leaf_name[0] == 'b') {
        return t;  // zeros
    }
    Rng rng(derive_seed(seed, name));
    if (name == "embed.w_pos") {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.02 * rng.normal();
        return t;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

bool ModelParams::is_buffer(const std::string& name) {
    return ends_with(name, ".running_mean") || ends_with(name, ".running_var");
}

std::vector<std::string> ModelParams::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tensors) {
        if (!is_buffer(name)) out.push_back(name);
    }
    return out;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p;
    p.config = config;
    for (const auto& [name, shape] : expected_shapes(config)) {
        p.tensors[name] = init_tensor(name, shape, seed);
    }
    return p;
}

ModelParams with_classification_head(const ModelParams& pretrained, std::uint64_t seed) {
    ModelConfig cfg = pretrained.config;
    cfg.head_type = HeadType::classification;

    ModelParams p;
    p.config = cfg;
    for (const auto& [name, shape] : expected_shapes(cfg)) {
        auto it = pretrained.tensors.find(name);
        if (it != pretrained.tensors.end()) {
            p.tensors[name] = it->second;  // encoder/embedding carried over
        } else {
            p.tensors[name] = init_tensor(name, shape, seed);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Graph construction

namespace {

// Binds parameter leaves and running buffers for one forward pass. Buffers
// either alias the live parameter set (training steps) or are private copies
// (inference, gradient checks).
struct Graph {
    const ModelConfig& cfg;
    std::map<std::string, NodePtr> leaves;
    ModelParams* live = nullptr;
    std::map<std::string, Tensor> buffer_copies;
    nn::Mode mode = nn::Mode::infer;
    Rng* rng = nullptr;

    explicit Graph(const ModelConfig& c) : cfg(c) {}

    NodePtr p(const std::string& name) const { return leaves.at(name); }

    Tensor& buffer(const std::string& name) {
        if (live) return live->tensors.at(name);
        return buffer_copies.at(name);
    }

    NodePtr maybe_dropout(const NodePtr& x) {
        if (mode == nn::Mode::infer || cfg.dropout == 0.0) return x;
        if (!rng) throw std::invalid_argument("train-mode forward with dropout needs an rng");
        return nn::dropout(x, cfg.dropout, *rng);
    }

    NodePtr embed(const Tensor& patches) {
        if (patches.rank() != 2 || patches.cols() != cfg.patch_len) {
            throw std::invalid_argument("embed_patches: patch width does not match patch_len");
        }
        if (patches.rows() != cfg.n_patches()) {
            throw std::invalid_argument("embed_patches: patch count does not match positional table");
        }
        return nn::add(nn::matmul(nn::constant(patches), p("embed.w_p")), p("embed.w_pos"));
    }

    NodePtr attention(const NodePtr& x, const std::string& L) {
        const std::size_t dh = cfg.d_model / cfg.n_heads;
        NodePtr q = nn::add_rowwise(nn::matmul(x, p(L + "attn.wq")), p(L + "attn.bq"));
        NodePtr k = nn::add_rowwise(nn::matmul(x, p(L + "attn.wk")), p(L + "attn.bk"));
        NodePtr v = nn::add_rowwise(nn::matmul(x, p(L + "attn.wv")), p(L + "attn.bv"));
        std::vector<NodePtr> heads;
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            NodePtr qh = nn::slice_cols(q, h * dh, (h + 1) * dh);
            NodePtr kh = nn::slice_cols(k, h * dh, (h + 1) * dh);
            NodePtr vh = nn::slice_cols(v, h * dh, (h + 1) * dh);
            NodePtr a = nn::softmax_rows(
                nn::scale(nn::matmul(qh, nn::transpose(kh)), 1.0 / std::sqrt(double(dh))));
            heads.push_back(nn::matmul(a, vh));
        }
        NodePtr cat = cfg.n_heads == 1 ? heads[0] : nn::concat_cols(heads);
        return nn::add_rowwise(nn::matmul(cat, p(L + "attn.wo")), p(L + "attn.bo"));
    }

    NodePtr feed_forward(const NodePtr& x, const std::string& L) {
        NodePtr h = nn::add_rowwise(nn::matmul(x, p(L + "ff.w1")), p(L + "ff.b1"));
        h = maybe_dropout(h);
        return nn::add_rowwise(nn::matmul(h, p(L + "ff.w2")), p(L + "ff.b2"));
    }

    NodePtr bn(const NodePtr& x, const std::string& prefix) {
        return nn::batchnorm(x, p(prefix + ".gamma"), p(prefix + ".beta"),
                             buffer(prefix + ".running_mean"),
                             buffer(prefix + ".running_var"), mode);
    }

    NodePtr encoder(NodePtr x) {
        for (std::size_t i = 0; i < cfg.n_layers; ++i) {
            const std::string L = "layer" + std::to_string(i) + ".";
            x = bn(nn::add(x, maybe_dropout(attention(x, L))), L + "bn1");
            x = bn(nn::add(x, maybe_dropout(feed_forward(x, L))), L + "bn2");
        }
        return x;
    }

    NodePtr forward_channel(const Tensor& patches) { return encoder(embed(patches)); }

    NodePtr reconstruct(const NodePtr& fhr_repr, const NodePtr& uc_repr) {
        NodePtr rep = maybe_dropout(nn::concat_cols({fhr_repr, uc_repr}));
        return nn::add_rowwise(nn::matmul(rep, p("head.recon.w")), p("head.recon.b"));
    }

    NodePtr logits(const NodePtr& fhr_repr, const NodePtr& uc_repr) {
        NodePtr cat = nn::concat_cols({nn::flatten_row(fhr_repr), nn::flatten_row(uc_repr)});
        cat = maybe_dropout(cat);
        return nn::add_rowwise(nn::matmul(cat, p("head.cls.w")), p("head.cls.b"));
    }
};

Graph bind_live(ModelParams& params, nn::Mode mode, Rng* rng) {
    params.config.validate();
    Graph g(params.config);
    g.mode = mode;
    g.rng = rng;
    const bool train = mode == nn::Mode::train;
    for (auto& [name, t] : params.tensors) {
        if (ModelParams::is_buffer(name)) continue;
        g.leaves[name] = nn::leaf(t, train);
    }
    g.live = &params;
    return g;
}

Graph bind_const(const ModelParams& params, nn::Mode mode, Rng* rng) {
    params.config.validate();
    Graph g(params.config);
    g.mode = mode;
    g.rng = rng;
    for (const auto& [name, t] : params.tensors) {
        if (ModelParams::is_buffer(name)) {
            g.buffer_copies[name] = t;
        } else {
            g.leaves[name] = nn::leaf(t, false);
        }
    }
    return g;
}

std::vector<double> mask_weights(const patch::MaskPattern& mask) {
    const std::size_t m = mask.count();
    if (m == 0) throw std::invalid_argument("pretrain loss: mask selects no patches");
    std::vector<double> w(mask.masked.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (mask.masked[i]) w[i] = 1.0 / static_cast<double>(m);
    }
    return w;
}

void check_channels(const patch::PatchSequence& fhr, const patch::PatchSequence& uc) {
    if (fhr.n_patches() != uc.n_patches()) {
        throw std::invalid_argument("forward: channel patch counts differ");
    }
}

nn::ParamMap collect_grads(const Graph& g) {
    nn::ParamMap grads;
    for (const auto& [name, node] : g.leaves) grads[name] = node->grad;
    return grads;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public forward passes

nn::Tensor embed_patches(const patch::PatchSequence& patches, const ModelParams& params) {
    Graph g = bind_const(params, nn::Mode::infer, nullptr);
    return g.embed(patches.patches)->value;
}

nn::Tensor encode(const nn::Tensor& tokens, ModelParams& params, nn::Mode mode,
                  Rng* dropout_rng) {
    if (tokens.rank() != 2 || tokens.cols() != params.config.d_model) {
        throw std::invalid_argument("encode: tokens must be N x d_model");
    }
    Graph g = bind_live(params, mode, dropout_rng);
    return g.encoder(nn::constant(tokens))->value;
}

std::pair<nn::Tensor, nn::Tensor> forward_channel_independent(
    const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
    ModelParams& params, nn::Mode mode, Rng* dropout_rng) {
    check_channels(fhr, uc);
    Graph g = bind_live(params, mode, dropout_rng);
    NodePtr f = g.forward_channel(fhr.patches);
    NodePtr u = g.forward_channel(uc.patches);
    return {f->value, u->value};
}

nn::Tensor reconstruct(const nn::Tensor& fhr_repr, const nn::Tensor& uc_repr,
                       const ModelParams& params) {
    if (params.config.head_type != HeadType::reconstruction) {
        throw std::runtime_error("reconstruct: model has no reconstruction head");
    }
    Graph g = bind_const(params, nn::Mode::infer, nullptr);
    return g.reconstruct(nn::constant(fhr_repr), nn::constant(uc_repr))->value;
}

double classify(const nn::Tensor& fhr_repr, const nn::Tensor& uc_repr,
                const ModelParams& params) {
    if (params.config.head_type != HeadType::classification) {
        throw std::runtime_error("classify: model has no classification head");
    }
    Graph g = bind_const(params, nn::Mode::infer, nullptr);
    const Tensor l = g.logits(nn::constant(fhr_repr), nn::constant(uc_repr))->value;
    const double m = std::max(l[0], l[1]);
    const double e0 = std::exp(l[0] - m);
    const double e1 = std::exp(l[1] - m);
    return e1 / (e0 + e1);
}

double pretrain_loss(const nn::Tensor& pred, const nn::Tensor& target,
                     const patch::MaskPattern& mask) {
    if (!pred.same_shape(target) || pred.rank() != 2) {
        throw std::invalid_argument("pretrain_loss: prediction/target shape mismatch");
    }
    if (mask.masked.size() != pred.rows()) {
        throw std::invalid_argument("pretrain_loss: mask length does not match patch count");
    }
    const std::size_t m = mask.count();
    if (m == 0) throw std::invalid_argument("pretrain loss: mask selects no patches");
    double total = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        if (!mask.masked[r]) continue;
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            const double d = target.at(r, c) - pred.at(r, c);
            total += d * d;
        }
    }
    return total / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Training steps

StepResult pretrain_step(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                         const patch::MaskPattern& mask, ModelParams& params,
                         Rng& dropout_rng) {
    if (params.config.head_type != HeadType::reconstruction) {
        throw std::runtime_error("pretrain_step: model has no reconstruction head");
    }
    check_channels(fhr, uc);
    auto [masked_fhr, uc_pass] = patch::apply_mask(fhr, uc, mask);
    const std::vector<double> weights = mask_weights(mask);

    Graph g = bind_live(params, nn::Mode::train, &dropout_rng);
    NodePtr f = g.forward_channel(masked_fhr.patches);
    NodePtr u = g.forward_channel(uc_pass.patches);
    NodePtr pred = g.reconstruct(f, u);
    NodePtr loss = nn::weighted_row_sse(pred, fhr.patches, weights);
    nn::backward(loss);

    StepResult out;
    out.loss = loss->value[0];
    out.grads = collect_grads(g);
    return out;
}

double pretrain_eval(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                     const patch::MaskPattern& mask, const ModelParams& params) {
    if (params.config.head_type != HeadType::reconstruction) {
        throw std::runtime_error("pretrain_eval: model has no reconstruction head");
    }
    check_channels(fhr, uc);
    auto [masked_fhr, uc_pass] = patch::apply_mask(fhr, uc, mask);

    Graph g = bind_const(params, nn::Mode::infer, nullptr);
    NodePtr f = g.forward_channel(masked_fhr.patches);
    NodePtr u = g.forward_channel(uc_pass.patches);
    const Tensor pred = g.reconstruct(f, u)->value;
    return pretrain_loss(pred, fhr.patches, mask);
}

StepResult finetune_step(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                         int label, ModelParams& params, Rng& dropout_rng) {
    if (params.config.head_type != HeadType::classification) {
        throw std::runtime_error("finetune_step: model has no classification head");
    }
    if (label != 0 && label != 1) throw std::invalid_argument("finetune_step: label must be 0 or 1");
    check_channels(fhr, uc);

    Graph g = bind_live(params, nn::Mode::train, &dropout_rng);
    NodePtr f = g.forward_channel(fhr.patches);
    NodePtr u = g.forward_channel(uc.patches);
    NodePtr loss = nn::cross_entropy(g.logits(f, u), {label});
    nn::backward(loss);

    StepResult out;
    out.loss = loss->value[0];
    out.grads = collect_grads(g);
    return out;
}

double predict_window(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                      const ModelParams& params) {
    if (params.config.head_type != HeadType::classification) {
        throw std::runtime_error("predict_window: model has no classification head");
    }
    check_channels(fhr, uc);
    Graph g = bind_const(params, nn::Mode::infer, nullptr);
    NodePtr f = g.forward_channel(fhr.patches);
    NodePtr u = g.forward_channel(uc.patches);
    const Tensor l = g.logits(f, u)->value;
    const double m = std::max(l[0], l[1]);
    const double e0 = std::exp(l[0] - m);
    const double e1 = std::exp(l[1] - m);
    return e1 / (e0 + e1);
}

nn::NodePtr build_loss_graph(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                             const patch::MaskPattern& mask, int label,
                             const ModelParams& params,
                             const std::vector<nn::NodePtr>& leaves, nn::Mode mode,
                             Rng* dropout_rng) {
    check_channels(fhr, uc);
    const std::vector<std::string> names = params.trainable_names();
    if (leaves.size() != names.size()) {
        throw std::invalid_argument("build_loss_graph: expected " +
                                    std::to_string(names.size()) + " leaves, got " +
                                    std::to_string(leaves.size()));
    }
    Graph g(params.config);
    g.mode = mode;
    g.rng = dropout_rng;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!leaves[i]->value.same_shape(params.tensors.at(names[i]))) {
            throw std::invalid_argument("build_loss_graph: leaf shape mismatch for " + names[i]);
        }
        g.leaves[names[i]] = leaves[i];
    }
    for (const auto& [name, t] : params.tensors) {
        if (ModelParams::is_buffer(name)) g.buffer_copies[name] = t;
    }

    if (params.config.head_type == HeadType::reconstruction) {
        auto [masked_fhr, uc_pass] = patch::apply_mask(fhr, uc, mask);
        NodePtr f = g.forward_channel(masked_fhr.patches);
        NodePtr u = g.forward_channel(uc_pass.patches);
        return nn::weighted_row_sse(g.reconstruct(f, u), fhr.patches, mask_weights(mask));
    }
    NodePtr f = g.forward_channel(fhr.patches);
    NodePtr u = g.forward_channel(uc.patches);
    return nn::cross_entropy(g.logits(f, u), {label});
}

// ---------------------------------------------------------------------------
// Weight file

namespace {

constexpr char kMagic[4] = {'C', 'T', 'G', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error(path + ": truncated weight file");
    }
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    const std::uint64_t lo = get_u32(in, path);
    const std::uint64_t hi = get_u32(in, path);
    return lo | hi << 32;
}

std::string config_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["patch_len"] = cfg.patch_len;
    j["stride"] = cfg.stride;
    j["context_len"] = cfg.context_len;
    j["d_model"] = cfg.d_model;
    j["n_heads"] = cfg.n_heads;
    j["n_layers"] = cfg.n_layers;
    j["ff_dim"] = cfg.ff_dim;
    j["dropout"] = cfg.dropout;
    j["head_type"] = head_type_name(cfg.head_type);
    return j.dump();
}

ModelConfig config_from_json(const std::string& text, const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": bad embedded config: " + e.what());
    }
    ModelConfig cfg;
    try {
        cfg.patch_len = j.at("patch_len").get<std::size_t>();
        cfg.stride = j.at("stride").get<std::size_t>();
        cfg.context_len = j.at("context_len").get<std::size_t>();
        cfg.d_model = j.at("d_model").get<std::size_t>();
        cfg.n_heads = j.at("n_heads").get<std::size_t>();
        cfg.n_layers = j.at("n_layers").get<std::size_t>();
        cfg.ff_dim = j.at("ff_dim").get<std::size_t>();
        cfg.dropout = j.at("dropout").get<double>();
        cfg.head_type = parse_head_type(j.at("head_type").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": bad embedded config: " + e.what());
    }
    return cfg;
}

}  // namespace

void save_params(const ModelParams& params, const std::string& path) {
    params.config.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight file " + path);

    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const std::string cfg = config_json(params.config);
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    for (const auto& [name, t] : params.tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t dim : t.shape()) put_u64(out, dim);
        for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
    }
    if (!out) throw std::runtime_error("write failed for weight file " + path);
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file " + path);

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error(path + ": not a CTGW weight file");
    }
    const std::uint32_t version = get_u32(in, path);
    if (version != kVersion) {
        throw std::runtime_error(path + ": unsupported weight-file version " +
                                 std::to_string(version));
    }
    const std::uint32_t cfg_len = get_u32(in, path);
    std::string cfg_text(cfg_len, '\0');
    if (!in.read(cfg_text.data(), cfg_len)) {
        throw std::runtime_error(path + ": truncated weight file");
    }

    ModelParams params;
    params.config = config_from_json(cfg_text, path);

    while (true) {
        in.peek();
        if (in.eof()) break;
        const std::uint32_t name_len = get_u32(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw std::runtime_error(path + ": truncated weight file");
        }
        const std::uint32_t rank = get_u32(in, path);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get_u64(in, path));
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::uint32_t bits = get_u32(in, path);
            float f;
            std::memcpy(&f, &bits, 4);
            t[i] = static_cast<double>(f);
        }
        if (!params.tensors.emplace(std::move(name), std::move(t)).second) {
            throw std::runtime_error(path + ": duplicate tensor name");
        }
    }

    const auto expected = expected_shapes(params.config);
    for (const auto& [name, shape] : expected) {
        auto it = params.tensors.find(name);
        if (it == params.tensors.end()) {
            throw std::runtime_error(path + ": missing tensor " + name);
        }
        if (it->second.shape() != shape) {
            throw std::runtime_error(path + ": tensor " + name +
                                     " does not match the embedded config");
        }
        nn::check_finite(it->second, name.c_str());
    }
    if (params.tensors.size() != expected.size()) {
        throw std::runtime_error(path + ": unexpected extra tensors");
    }
    return params;
}

}  // namespace ctgfm::model
