#include "cvr/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace cvr {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void HourglassStackConfig::validate() const {
    check_arg(num_modules >= 1, "hourglass: num_modules must be >= 1");
    check_arg(static_cast<int>(z_resolutions.size()) == num_modules,
              "hourglass: z_resolutions size must equal num_modules");
    for (int r : z_resolutions) check_arg(r >= 1, "hourglass: z resolution must be >= 1");
    check_arg(base_channels >= 1, "hourglass: base_channels must be >= 1");
    check_arg(input_h % 4 == 0 && input_w % 4 == 0, "hourglass: input size must be divisible by 4");
    check_arg(downsample_depth >= 1, "hourglass: downsample_depth must be >= 1");
    check_arg(out_h() % (1 << downsample_depth) == 0 && out_w() % (1 << downsample_depth) == 0,
              "hourglass: feature size not divisible by 2^downsample_depth");
}

void CoordNetConfig::validate() const {
    check_arg(num_conv_layers >= 1, "coordnet: num_conv_layers must be >= 1");
    check_arg(static_cast<int>(channel_plan.size()) == num_conv_layers,
              "coordnet: channel_plan size must equal num_conv_layers");
    check_arg(static_cast<int>(strides.size()) == num_conv_layers,
              "coordnet: strides size must equal num_conv_layers");
    for (int c : channel_plan) check_arg(c >= 1, "coordnet: channel counts must be >= 1");
    for (int s : strides) check_arg(s >= 1, "coordnet: strides must be >= 1");
    check_arg(num_landmarks >= 1, "coordnet: num_landmarks must be >= 1");
}

HourglassStackConfig toy_hourglass_config() {
    HourglassStackConfig cfg;
    cfg.num_modules = 2;
    cfg.input_h = cfg.input_w = 64;
    cfg.base_channels = 16;
    cfg.z_resolutions = {1, 16};
    cfg.downsample_depth = 2;
    return cfg;
}

HourglassStackConfig paper_hourglass_config() {
    HourglassStackConfig cfg;
    cfg.num_modules = 4;
    cfg.input_h = cfg.input_w = 256;
    cfg.base_channels = 64;
    cfg.z_resolutions = {1, 2, 4, 64};
    cfg.downsample_depth = 4;
    return cfg;
}

CoordNetConfig toy_coordnet_config() {
    CoordNetConfig cfg;
    cfg.num_conv_layers = 5;
    cfg.channel_plan = {8, 16, 32, 32, 32};
    cfg.strides = {1, 2, 2, 2, 1};
    cfg.leaky_slope = 0.01;
    cfg.num_landmarks = 12;
    cfg.global_pool = true;
    return cfg;
}

CoordNetConfig paper_coordnet_config() {
    CoordNetConfig cfg;
    cfg.num_conv_layers = 5;
    cfg.channel_plan = {32, 64, 128, 128, 128};
    cfg.strides = {1, 2, 2, 2, 1};
    cfg.leaky_slope = 0.01;
    cfg.num_landmarks = 68;
    cfg.global_pool = true;
    return cfg;
}

GraphContext::GraphContext(ModelState& state, Mode mode, bool trainable)
    : state_(state), mode_(mode), trainable_(trainable) {}

VarPtr GraphContext::param(const std::string& name, std::vector<int> shape, Init init,
                           std::int64_t fan_in) {
    auto bound = bound_.find(name);
    if (bound != bound_.end()) return bound->second;
    auto it = state_.params.find(name);
    if (it == state_.params.end()) {
        Tensor t(shape);
        switch (init) {
            case Init::kZeros:
                break;
            case Init::kOnes:
                t.fill(1.0);
                break;
            case Init::kFanInUniform: {
                check_arg(fan_in > 0, "param init: fan_in required for " + name);
                std::mt19937_64 rng(splitmix64(state_.rng_seed ^ fnv1a(name)));
                const double limit = std::sqrt(1.0 / static_cast<double>(fan_in));
                std::uniform_real_distribution<double> u(-limit, limit);
                for (std::int64_t i = 0; i < t.size(); ++i) t[i] = u(rng);
                break;
            }
        }
        it = state_.params.emplace(name, std::move(t)).first;
    } else {
        check_arg(it->second.shape() == shape,
                  "checkpoint/config mismatch for parameter " + name + ": stored " +
                      shape_str(it->second.shape()) + ", expected " + shape_str(shape));
    }
    VarPtr v = make_leaf(it->second, trainable_);
    bound_[name] = v;
    return v;
}

Tensor* GraphContext::buffer(const std::string& name, int size, double init_value) {
    auto it = state_.buffers.find(name);
    if (it == state_.buffers.end())
        it = state_.buffers.emplace(name, Tensor::full({size}, init_value)).first;
    else
        check_arg(it->second.size() == size, "buffer size mismatch for " + name);
    return &it->second;
}

namespace {

using nn::add;
using nn::conv2d;
using nn::conv3d;

VarPtr bn(GraphContext& ctx, const std::string& name, const VarPtr& x, int channels) {
    VarPtr gamma = ctx.param(name + ".gamma", {channels}, GraphContext::Init::kOnes);
    VarPtr beta = ctx.param(name + ".beta", {channels}, GraphContext::Init::kZeros);
    Tensor* rm = ctx.buffer(name + ".rmean", channels, 0.0);
    Tensor* rv = ctx.buffer(name + ".rvar", channels, 1.0);
    return nn::batch_norm(x, gamma, beta, rm, rv, ctx.mode().training,
                          ctx.mode().update_stats);
}

VarPtr conv(GraphContext& ctx, const std::string& name, const VarPtr& x,
            int cin, int cout, int k, int stride, int pad) {
    VarPtr w = ctx.param(name + ".w", {cout, cin, k, k}, GraphContext::Init::kFanInUniform,
                         static_cast<std::int64_t>(cin) * k * k);
    VarPtr b = ctx.param(name + ".b", {cout}, GraphContext::Init::kZeros);
    return conv2d(x, w, b, stride, pad);
}

VarPtr conv_bn_relu(GraphContext& ctx, const std::string& name, const VarPtr& x,
                    int cin, int cout, int k, int stride, int pad) {
    return nn::relu(bn(ctx, name + ".bn", conv(ctx, name, x, cin, cout, k, stride, pad), cout));
}

// Pre-activation bottleneck residual block.
VarPtr residual(GraphContext& ctx, const std::string& name, const VarPtr& x, int c) {
    const int mid = std::max(c / 2, 1);
    VarPtr r = nn::relu(bn(ctx, name + ".bn1", x, c));
    r = conv(ctx, name + ".conv1", r, c, mid, 1, 1, 0);
    r = nn::relu(bn(ctx, name + ".bn2", r, mid));
    r = conv(ctx, name + ".conv2", r, mid, mid, 3, 1, 1);
    r = nn::relu(bn(ctx, name + ".bn3", r, mid));
    r = conv(ctx, name + ".conv3", r, mid, c, 1, 1, 0);
    return add(x, r);
}

VarPtr hourglass_block(GraphContext& ctx, const std::string& name, const VarPtr& x,
                       int c, int depth) {
    VarPtr up1 = residual(ctx, name + ".up1", x, c);
    VarPtr low = nn::max_pool2d(x, 2);
    low = residual(ctx, name + ".low1", low, c);
    VarPtr mid = depth > 1 ? hourglass_block(ctx, name + ".inner", low, c, depth - 1)
                           : residual(ctx, name + ".low2", low, c);
    VarPtr low3 = residual(ctx, name + ".low3", mid, c);
    return add(up1, nn::upsample_nearest2d(low3, 2));
}

}  // namespace

std::vector<VarPtr> hourglass_graph(GraphContext& ctx, const VarPtr& image,
                                    const HourglassStackConfig& cfg) {
    cfg.validate();
    check_arg(image->value.ndim() == 4 && image->value.dim(1) == 3 &&
                  image->value.dim(2) == cfg.input_h && image->value.dim(3) == cfg.input_w,
              "hourglass: image must be (B,3," + std::to_string(cfg.input_h) + "," +
                  std::to_string(cfg.input_w) + "), got " + shape_str(image->value.shape()));
    const int c = cfg.base_channels;

    VarPtr x = conv_bn_relu(ctx, "g.stem.conv1", image, 3, c, 3, 2, 1);
    x = residual(ctx, "g.stem.res1", x, c);
    x = nn::max_pool2d(x, 2);
    x = residual(ctx, "g.stem.res2", x, c);

    std::vector<VarPtr> outputs;
    for (int m = 0; m < cfg.num_modules; ++m) {
        const std::string pfx = "g.hg" + std::to_string(m);
        VarPtr y = hourglass_block(ctx, pfx + ".hg", x, c, cfg.downsample_depth);
        y = residual(ctx, pfx + ".res", y, c);
        VarPtr f = conv_bn_relu(ctx, pfx + ".feat", y, c, c, 1, 1, 0);
        const int dm = cfg.z_resolutions[static_cast<std::size_t>(m)];
        VarPtr out = conv(ctx, pfx + ".head", f, c, dm, 1, 1, 0);  // linear head
        outputs.push_back(out);
        if (m + 1 < cfg.num_modules) {
            VarPtr remap = add(conv(ctx, pfx + ".remap_f", f, c, c, 1, 1, 0),
                               conv(ctx, pfx + ".remap_o", out, dm, c, 1, 1, 0));
            x = add(x, remap);
        }
    }
    return outputs;
}

VarPtr coordnet_graph(GraphContext& ctx, const VarPtr& volume, const CoordNetConfig& cfg) {
    cfg.validate();
    check_arg(volume->value.ndim() == 5 && volume->value.dim(1) == 1,
              "coordnet: volume must be (B,1,D,H,W), got " + shape_str(volume->value.shape()));
    VarPtr x = volume;
    int cin = 1;
    for (int l = 0; l < cfg.num_conv_layers; ++l) {
        const int cout = cfg.channel_plan[static_cast<std::size_t>(l)];
        const int s = cfg.strides[static_cast<std::size_t>(l)];
        VarPtr w = ctx.param("p.conv" + std::to_string(l) + ".w", {cout, cin, 3, 3, 3},
                             GraphContext::Init::kFanInUniform,
                             static_cast<std::int64_t>(cin) * 27);
        VarPtr b = ctx.param("p.conv" + std::to_string(l) + ".b", {cout},
                             GraphContext::Init::kZeros);
        x = conv3d(x, w, b, s, 1);
        if (l + 1 < cfg.num_conv_layers) {
            x = bn(ctx, "p.bn" + std::to_string(l), x, cout);
            x = nn::leaky_relu(x, cfg.leaky_slope);
        }
        cin = cout;
    }
    const int B = x->value.dim(0);
    VarPtr feat;
    int fdim;
    if (cfg.global_pool) {
        feat = nn::global_avg_pool3d(x);
        fdim = cin;
    } else {
        fdim = static_cast<int>(x->value.size() / B);
        feat = nn::reshape(x, {B, fdim});
    }
    VarPtr w = ctx.param("p.fc.w", {cfg.output_dim(), fdim},
                         GraphContext::Init::kFanInUniform, fdim);
    VarPtr b = ctx.param("p.fc.b", {cfg.output_dim()}, GraphContext::Init::kZeros);
    return nn::linear(feat, w, b);
}

std::vector<Tensor> hourglass_forward(const Tensor& image, ModelState& state,
                                      const HourglassStackConfig& cfg, bool training) {
    GraphContext ctx(state, Mode{training, false}, false);
    auto outs = hourglass_graph(ctx, make_leaf(image), cfg);
    std::vector<Tensor> values;
    values.reserve(outs.size());
    for (auto& o : outs) values.push_back(o->value);
    return values;
}

Tensor coordnet_forward(const Tensor& volume, ModelState& state,
                        const CoordNetConfig& cfg, bool training) {
    GraphContext ctx(state, Mode{training, false}, false);
    return coordnet_graph(ctx, make_leaf(volume), cfg)->value;
}

std::pair<std::vector<Tensor>, Tensor> model_forward(const Tensor& image, ModelState& state,
                                                     const HourglassStackConfig& hg_cfg,
                                                     const CoordNetConfig& cn_cfg,
                                                     bool training) {
    GraphContext ctx(state, Mode{training, false}, false);
    auto volumes = hourglass_graph(ctx, make_leaf(image), hg_cfg);
    const VarPtr& last = volumes.back();
    const int B = last->value.dim(0);
    VarPtr vol5 = nn::reshape(last, {B, 1, hg_cfg.d_max(), hg_cfg.out_h(), hg_cfg.out_w()});
    VarPtr coords = coordnet_graph(ctx, vol5, cn_cfg);
    std::vector<Tensor> values;
    values.reserve(volumes.size());
    for (auto& o : volumes) values.push_back(o->value);
    return {std::move(values), coords->value};
}

void ensure_initialized(ModelState& state, const HourglassStackConfig& hg_cfg,
                        const CoordNetConfig& cn_cfg) {
    Tensor image({1, 3, hg_cfg.input_h, hg_cfg.input_w});
    Tensor volume({1, 1, hg_cfg.d_max(), hg_cfg.out_h(), hg_cfg.out_w()});
    GraphContext ctx(state, Mode{false, false}, false);
    hourglass_graph(ctx, make_leaf(image), hg_cfg);
    coordnet_graph(ctx, make_leaf(volume), cn_cfg);
}

KvMap hourglass_config_kv(const HourglassStackConfig& cfg) {
    KvMap kv;
    kv["hg.num_modules"] = std::to_string(cfg.num_modules);
    kv["hg.input_h"] = std::to_string(cfg.input_h);
    kv["hg.input_w"] = std::to_string(cfg.input_w);
    kv["hg.base_channels"] = std::to_string(cfg.base_channels);
    kv["hg.z_resolutions"] = int_list_str(cfg.z_resolutions);
    kv["hg.downsample_depth"] = std::to_string(cfg.downsample_depth);
    return kv;
}

KvMap coordnet_config_kv(const CoordNetConfig& cfg) {
    KvMap kv;
    kv["coord.num_conv_layers"] = std::to_string(cfg.num_conv_layers);
    kv["coord.channel_plan"] = int_list_str(cfg.channel_plan);
    kv["coord.strides"] = int_list_str(cfg.strides);
    std::ostringstream slope;
    slope.precision(17);
    slope << cfg.leaky_slope;
    kv["coord.leaky_slope"] = slope.str();
    kv["coord.num_landmarks"] = std::to_string(cfg.num_landmarks);
    kv["coord.global_pool"] = cfg.global_pool ? "true" : "false";
    return kv;
}

HourglassStackConfig hourglass_config_from_kv(const KvMap& kv) {
    HourglassStackConfig cfg;
    cfg.num_modules = kv_int(kv, "hg.num_modules", cfg.num_modules);
    cfg.input_h = kv_int(kv, "hg.input_h", cfg.input_h);
    cfg.input_w = kv_int(kv, "hg.input_w", cfg.input_w);
    cfg.base_channels = kv_int(kv, "hg.base_channels", cfg.base_channels);
    cfg.z_resolutions = kv_int_list(kv, "hg.z_resolutions", cfg.z_resolutions);
    cfg.downsample_depth = kv_int(kv, "hg.downsample_depth", cfg.downsample_depth);
    cfg.validate();
    return cfg;
}

CoordNetConfig coordnet_config_from_kv(const KvMap& kv) {
    CoordNetConfig cfg;
    cfg.num_conv_layers = kv_int(kv, "coord.num_conv_layers", cfg.num_conv_layers);
    cfg.channel_plan = kv_int_list(kv, "coord.channel_plan", cfg.channel_plan);
    cfg.strides = kv_int_list(kv, "coord.strides", cfg.strides);
    cfg.leaky_slope = kv_double(kv, "coord.leaky_slope", cfg.leaky_slope);
    cfg.num_landmarks = kv_int(kv, "coord.num_landmarks", cfg.num_landmarks);
    cfg.global_pool = kv_bool(kv, "coord.global_pool", cfg.global_pool);
    cfg.validate();
    return cfg;
}

namespace {

constexpr char kCkptMagic[4] = {'C', 'V', 'R', 'K'};

void write_string(std::ofstream& f, const std::string& s) {
    const std::uint32_t n = static_cast<std::uint32_t>(s.size());
    f.write(reinterpret_cast<const char*>(&n), 4);
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& f) {
    std::uint32_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 4);
    check_state(f.good() && n < (1u << 24), "corrupt checkpoint string");
    std::string s(n, '\0');
    f.read(s.data(), n);
    check_state(f.good(), "corrupt checkpoint string");
    return s;
}

void write_tensor_map(std::ofstream& f, const std::map<std::string, Tensor>& m) {
    const std::uint64_t n = m.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& [name, t] : m) {
        write_string(f, name);
        const std::uint32_t nd = static_cast<std::uint32_t>(t.ndim());
        f.write(reinterpret_cast<const char*>(&nd), 4);
        for (int i = 0; i < t.ndim(); ++i) {
            const std::uint32_t d = static_cast<std::uint32_t>(t.dim(i));
            f.write(reinterpret_cast<const char*>(&d), 4);
        }
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * 8));
    }
}

std::map<std::string, Tensor> read_tensor_map(std::ifstream& f) {
    std::uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    check_state(f.good(), "corrupt checkpoint tensor table");
    std::map<std::string, Tensor> m;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string name = read_string(f);
        std::uint32_t nd = 0;
        f.read(reinterpret_cast<char*>(&nd), 4);
        check_state(f.good() && nd <= 8, "corrupt tensor rank");
        std::vector<int> shape(nd);
        for (auto& d : shape) {
            std::uint32_t v = 0;
            f.read(reinterpret_cast<char*>(&v), 4);
            d = static_cast<int>(v);
        }
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
        check_state(f.good(), "truncated tensor data for " + name);
        m.emplace(std::move(name), std::move(t));
    }
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& state,
                     const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg) {
    std::ofstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open for writing: " + path);
    f.write(kCkptMagic, 4);
    write_string(f, state.version);
    write_string(f, state.scheme_id);
    const unsigned char flags[2] = {state.pretrained_voxel ? static_cast<unsigned char>(1)
                                                           : static_cast<unsigned char>(0),
                                    state.pretrained_coord ? static_cast<unsigned char>(1)
                                                           : static_cast<unsigned char>(0)};
    f.write(reinterpret_cast<const char*>(flags), 2);
    f.write(reinterpret_cast<const char*>(&state.rng_seed), 8);
    KvMap kv = hourglass_config_kv(hg_cfg);
    for (const auto& [k, v] : coordnet_config_kv(cn_cfg)) kv[k] = v;
    std::ostringstream cfg_text;
    for (const auto& [k, v] : kv) cfg_text << k << " = " << v << "\n";
    write_string(f, cfg_text.str());
    write_tensor_map(f, state.params);
    write_tensor_map(f, state.buffers);
    check_state(f.good(), "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    check_state(f.good() && std::memcmp(magic, kCkptMagic, 4) == 0,
                "bad checkpoint magic in " + path);
    Checkpoint ck;
    ck.state.version = read_string(f);
    check_state(ck.state.version == "cvr-ckpt-1",
                "unsupported checkpoint version: " + ck.state.version);
    ck.state.scheme_id = read_string(f);
    unsigned char flags[2];
    f.read(reinterpret_cast<char*>(flags), 2);
    ck.state.pretrained_voxel = flags[0] != 0;
    ck.state.pretrained_coord = flags[1] != 0;
    f.read(reinterpret_cast<char*>(&ck.state.rng_seed), 8);
    const KvMap kv = parse_kv_text(read_string(f));
    ck.hg_cfg = hourglass_config_from_kv(kv);
    ck.cn_cfg = coordnet_config_from_kv(kv);
    ck.state.params = read_tensor_map(f);
    ck.state.buffers = read_tensor_map(f);
    return ck;
}

}  // namespace cvr
