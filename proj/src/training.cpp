#include "cvr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace cvr {

void TrainConfig::validate() const {
    check_arg(lambda_coord >= 0.0, "train: lambda_coord must be >= 0");
    check_arg(lr_initial > 0.0, "train: lr_initial must be positive");
    check_arg(lr_decay_factor > 0.0, "train: lr_decay_factor must be positive");
    check_arg(lr_decay_every >= 1, "train: lr_decay_every must be >= 1");
    check_arg(epochs_pretrain >= 0 && epochs_finetune >= 0, "train: epochs must be >= 0");
    check_arg(batch_size >= 1, "train: batch_size must be >= 1");
    check_arg(sigma > 0.0, "train: sigma must be positive");
}

double lr_at(const TrainConfig& cfg, int epoch) {
    check_arg(epoch >= 0, "lr_at: epoch must be >= 0");
    return cfg.lr_initial *
           std::pow(cfg.lr_decay_factor, -static_cast<double>(epoch / cfg.lr_decay_every));
}

std::string TrainLog::to_text() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& r : records)
        os << r.step << " " << r.stage << " " << r.l_vox << " " << r.l_coord << " "
           << r.l_total << " " << r.lr << "\n";
    return os.str();
}

void save_train_log(const std::string& path, const TrainLog& log) {
    std::ofstream f(path);
    check_state(f.good(), "cannot open for writing: " + path);
    f << log.to_text();
    check_state(f.good(), "write failed: " + path);
}

Tensor grid_to_tensor(const VoxelGrid& grid) {
    // VoxelGrid storage is x-fastest, which is exactly (d,h,w) row-major.
    return Tensor::from({grid.d, grid.h, grid.w}, grid.values);
}

double voxel_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                  bool normalize) {
    check_arg(pred.size() == target.size(), "voxel_loss: level count mismatch");
    check_arg(!pred.empty(), "voxel_loss: no levels");
    double total = 0.0;
    std::int64_t count = 0;
    for (std::size_t m = 0; m < pred.size(); ++m) {
        check_arg(pred[m].same_shape(target[m]),
                  "voxel_loss: shape mismatch at level " + std::to_string(m) + ": " +
                      shape_str(pred[m].shape()) + " vs " + shape_str(target[m].shape()));
        for (std::int64_t i = 0; i < pred[m].size(); ++i) {
            const double d = pred[m][i] - target[m][i];
            total += d * d;
        }
        count += pred[m].size();
    }
    return normalize ? total / static_cast<double>(count) : total;
}

double voxel_loss(const std::vector<Tensor>& pred, const VolumePyramid& target,
                  bool normalize) {
    std::vector<Tensor> t;
    t.reserve(target.grids.size());
    for (const auto& g : target.grids) t.push_back(grid_to_tensor(g));
    return voxel_loss(pred, t, normalize);
}

double coord_loss(const Tensor& pred, const Tensor& target, bool normalize) {
    check_arg(pred.size() == target.size(), "coord_loss: length mismatch");
    double total = 0.0;
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        total += d * d;
    }
    return normalize ? total / static_cast<double>(pred.size()) : total;
}

double joint_loss(const std::vector<Tensor>& pred_volumes,
                  const std::vector<Tensor>& target_volumes,
                  const Tensor& pred_coords, const Tensor& target_coords,
                  double lambda_coord, bool normalize) {
    check_arg(lambda_coord >= 0.0, "joint_loss: lambda must be >= 0");
    return voxel_loss(pred_volumes, target_volumes, normalize) +
           lambda_coord * coord_loss(pred_coords, target_coords, normalize);
}

void RmsProp::step(ModelState& state, const std::map<std::string, VarPtr>& bound,
                   double lr) {
    for (const auto& [name, var] : bound) {
        if (!var->requires_grad || var->grad.empty()) continue;
        auto pit = state.params.find(name);
        check_state(pit != state.params.end(), "optimizer: unknown parameter " + name);
        Tensor& p = pit->second;
        auto cit = cache_.find(name);
        if (cit == cache_.end()) cit = cache_.emplace(name, Tensor::zeros(p.shape())).first;
        Tensor& c = cit->second;
        for (std::int64_t i = 0; i < p.size(); ++i) {
            const double g = var->grad[i];
            c[i] = rho_ * c[i] + (1.0 - rho_) * g * g;
            p[i] -= lr * g / (std::sqrt(c[i]) + eps_);
        }
    }
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct Batch {
    Tensor images;                // (B,3,H,W)
    std::vector<Tensor> pyramid;  // per level (B,d,h,w)
    Tensor coords;                // (B,3N)
};

Batch gather_batch(const TrainSet& data, const std::vector<int>& idx,
                   std::size_t begin, std::size_t end) {
    const int B = static_cast<int>(end - begin);
    const TrainSample& first = data[static_cast<std::size_t>(idx[begin])];
    Batch b;
    std::vector<int> ishape = first.image.shape();
    b.images = Tensor({B, ishape[0], ishape[1], ishape[2]});
    for (const auto& level : first.pyramid) {
        std::vector<int> s = level.shape();
        b.pyramid.emplace_back(std::vector<int>{B, s[0], s[1], s[2]});
    }
    b.coords = Tensor({B, static_cast<int>(first.coords.size())});
    for (int n = 0; n < B; ++n) {
        const TrainSample& s = data[static_cast<std::size_t>(idx[begin + static_cast<std::size_t>(n)])];
        check_arg(s.image.same_shape(first.image) && s.coords.size() == first.coords.size(),
                  "training set samples must share shapes");
        std::copy(s.image.vec().begin(), s.image.vec().end(),
                  b.images.vec().begin() + static_cast<std::ptrdiff_t>(n * first.image.size()));
        for (std::size_t m = 0; m < s.pyramid.size(); ++m)
            std::copy(s.pyramid[m].vec().begin(), s.pyramid[m].vec().end(),
                      b.pyramid[m].vec().begin() +
                          static_cast<std::ptrdiff_t>(n * s.pyramid[m].size()));
        std::copy(s.coords.vec().begin(), s.coords.vec().end(),
                  b.coords.vec().begin() + static_cast<std::ptrdiff_t>(n * first.coords.size()));
    }
    return b;
}

VarPtr voxel_loss_graph(const std::vector<VarPtr>& preds, const std::vector<Tensor>& targets,
                        bool normalize) {
    check_arg(preds.size() == targets.size(), "voxel loss: level count mismatch");
    VarPtr total;
    std::int64_t count = 0;
    for (std::size_t m = 0; m < preds.size(); ++m) {
        VarPtr term = nn::sum_sq_diff(preds[m], targets[m]);
        total = total ? nn::add(total, term) : term;
        count += targets[m].size();
    }
    if (normalize) total = nn::scale(total, 1.0 / static_cast<double>(count));
    return total;
}

// One optimization stage over the dataset.
template <typename ForwardFn>
TrainLog run_stage(const std::string& stage, const TrainSet& data, ModelState& state,
                   const TrainConfig& cfg, int epochs, int epoch_offset,
                   const EpochCallback& on_epoch, ForwardFn&& forward_loss) {
    cfg.validate();
    check_arg(!data.empty(), "training set is empty");
    const auto t0 = std::chrono::steady_clock::now();
    TrainLog log;
    RmsProp opt;
    std::mt19937_64 shuffle_rng(state.rng_seed ^ cfg.seed ^ fnv1a(stage));
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    int step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = lr_at(cfg, epoch + epoch_offset);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Batch batch = gather_batch(data, order, begin, end);
            GraphContext ctx(state, Mode{true, true}, true);
            auto [loss, l_vox, l_coord] = forward_loss(ctx, batch);
            const double total = loss->value[0];
            if (!std::isfinite(total))
                throw std::runtime_error("non-finite loss in stage " + stage + " at step " +
                                         std::to_string(step) + " (epoch " +
                                         std::to_string(epoch) + ")");
            backward(loss);
            opt.step(state, ctx.bound_params(), lr);
            log.records.push_back({step, stage, l_vox, l_coord, total, lr});
            ++step;
        }
        if (on_epoch) on_epoch(epoch, state);
    }
    log.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
}

}  // namespace

TrainLog pretrain_voxel(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg, const EpochCallback& on_epoch) {
    hg_cfg.validate();
    TrainLog log = run_stage(
        "pretrain-voxel", data, state, cfg, cfg.epochs_pretrain, 0, on_epoch,
        [&](GraphContext& ctx, const Batch& batch) {
            auto preds = hourglass_graph(ctx, make_leaf(batch.images), hg_cfg);
            VarPtr loss = voxel_loss_graph(preds, batch.pyramid, cfg.normalize_losses);
            return std::tuple<VarPtr, double, double>(loss, loss->value[0], 0.0);
        });
    state.pretrained_voxel = true;
    return log;
}

TrainLog pretrain_coord(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg,
                        const EpochCallback& on_epoch) {
    hg_cfg.validate();
    cn_cfg.validate();
    TrainLog log = run_stage(
        "pretrain-coord", data, state, cfg, cfg.epochs_pretrain, 0, on_epoch,
        [&](GraphContext& ctx, const Batch& batch) {
            // Trains P on the ground-truth final-level volumes.
            const Tensor& gt_vol = batch.pyramid.back();
            const int B = gt_vol.dim(0);
            VarPtr vol = make_leaf(Tensor::from(
                {B, 1, gt_vol.dim(1), gt_vol.dim(2), gt_vol.dim(3)}, gt_vol.vec()));
            VarPtr pred = coordnet_graph(ctx, vol, cn_cfg);
            VarPtr loss = nn::sum_sq_diff(pred, batch.coords);
            if (cfg.normalize_losses)
                loss = nn::scale(loss, 1.0 / static_cast<double>(batch.coords.size()));
            return std::tuple<VarPtr, double, double>(loss, 0.0, loss->value[0]);
        });
    state.pretrained_coord = true;
    return log;
}

TrainLog finetune_joint(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg,
                        const EpochCallback& on_epoch) {
    hg_cfg.validate();
    cn_cfg.validate();
    if (!cfg.allow_skip_pretrain)
        check_state(state.pretrained_voxel && state.pretrained_coord,
                    "finetune_joint requires pre-trained subnetworks "
                    "(set allow_skip_pretrain to override)");
    const int epoch_offset = cfg.decay_per_stage ? 0 : cfg.epochs_pretrain;
    return run_stage(
        "finetune", data, state, cfg, cfg.epochs_finetune, epoch_offset, on_epoch,
        [&](GraphContext& ctx, const Batch& batch) {
            auto preds = hourglass_graph(ctx, make_leaf(batch.images), hg_cfg);
            const VarPtr& last = preds.back();
            const int B = last->value.dim(0);
            VarPtr vol = nn::reshape(last, {B, 1, hg_cfg.d_max(), hg_cfg.out_h(),
                                            hg_cfg.out_w()});
            VarPtr pred_coords = coordnet_graph(ctx, vol, cn_cfg);
            VarPtr l_vox = voxel_loss_graph(preds, batch.pyramid, cfg.normalize_losses);
            VarPtr l_coord = nn::sum_sq_diff(pred_coords, batch.coords);
            if (cfg.normalize_losses)
                l_coord = nn::scale(l_coord, 1.0 / static_cast<double>(batch.coords.size()));
            VarPtr loss = nn::add(l_vox, nn::scale(l_coord, cfg.lambda_coord));
            return std::tuple<VarPtr, double, double>(loss, l_vox->value[0],
                                                      l_coord->value[0]);
        });
}

KvMap train_config_kv(const TrainConfig& cfg) {
    KvMap kv;
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    kv["train.lambda_coord"] = num(cfg.lambda_coord);
    kv["train.lr_initial"] = num(cfg.lr_initial);
    kv["train.lr_decay_factor"] = num(cfg.lr_decay_factor);
    kv["train.lr_decay_every"] = std::to_string(cfg.lr_decay_every);
    kv["train.epochs_pretrain"] = std::to_string(cfg.epochs_pretrain);
    kv["train.epochs_finetune"] = std::to_string(cfg.epochs_finetune);
    kv["train.batch_size"] = std::to_string(cfg.batch_size);
    kv["train.sigma"] = num(cfg.sigma);
    kv["train.seed"] = std::to_string(cfg.seed);
    kv["train.normalize_losses"] = cfg.normalize_losses ? "true" : "false";
    kv["train.decay_per_stage"] = cfg.decay_per_stage ? "true" : "false";
    kv["train.allow_skip_pretrain"] = cfg.allow_skip_pretrain ? "true" : "false";
    kv["train.checkpoint_every"] = std::to_string(cfg.checkpoint_every);
    return kv;
}

TrainConfig train_config_from_kv(const KvMap& kv) {
    TrainConfig cfg;
    cfg.lambda_coord = kv_double(kv, "train.lambda_coord", cfg.lambda_coord);
    cfg.lr_initial = kv_double(kv, "train.lr_initial", cfg.lr_initial);
    cfg.lr_decay_factor = kv_double(kv, "train.lr_decay_factor", cfg.lr_decay_factor);
    cfg.lr_decay_every = kv_int(kv, "train.lr_decay_every", cfg.lr_decay_every);
    cfg.epochs_pretrain = kv_int(kv, "train.epochs_pretrain", cfg.epochs_pretrain);
    cfg.epochs_finetune = kv_int(kv, "train.epochs_finetune", cfg.epochs_finetune);
    cfg.batch_size = kv_int(kv, "train.batch_size", cfg.batch_size);
    cfg.sigma = kv_double(kv, "train.sigma", cfg.sigma);
    cfg.seed = static_cast<std::uint64_t>(std::stoull(kv_get(kv, "train.seed", "0")));
    cfg.normalize_losses = kv_bool(kv, "train.normalize_losses", cfg.normalize_losses);
    cfg.decay_per_stage = kv_bool(kv, "train.decay_per_stage", cfg.decay_per_stage);
    cfg.allow_skip_pretrain = kv_bool(kv, "train.allow_skip_pretrain", cfg.allow_skip_pretrain);
    cfg.checkpoint_every = kv_int(kv, "train.checkpoint_every", cfg.checkpoint_every);
    cfg.validate();
    return cfg;
}

}  // namespace cvr
