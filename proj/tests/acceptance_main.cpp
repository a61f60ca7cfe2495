// Acceptance gate: one self-contained check per release criterion, each
// printing a single pass/fail line. Exit status is nonzero if any fail.
// An optional numeric argument list restricts the run to those checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <vector>

#include "cvr/data.hpp"
#include "cvr/metrics.hpp"
#include "cvr/training.hpp"

using namespace cvr;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Gate {
    int failures = 0;
    std::set<int> only;

    bool enabled(int id) const { return only.empty() || only.count(id) > 0; }

    void report(int id, const std::string& name, bool ok, const std::string& detail,
                double seconds) {
        std::printf("[%s] %d %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                    detail.c_str(), seconds);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double now_sec() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

LandmarkSet random_set(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    LandmarkSet lm;
    for (int i = 0; i < n; ++i) lm.points.push_back({u(rng), u(rng), u(rng)});
    return lm;
}

// 1: encode equals a dense per-landmark triple-loop oracle.
void check_encode_oracle(Gate& g) {
    const double t0 = now_sec();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> nd(1, 68);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        LandmarkSet lm = random_set(rng, nd(rng), 0.0, 15.0);
        VoxelGrid got = encode(lm, 16, 16, 16, 1.0, false);
        for (int k = 0; k < 16; ++k)
            for (int j = 0; j < 16; ++j)
                for (int i = 0; i < 16; ++i) {
                    double want = 0.0;
                    for (const auto& p : lm.points) {
                        const double dx = p.x - i, dy = p.y - j, dz = p.z - k;
                        want = std::max(want, std::exp(-(dx * dx + dy * dy + dz * dz) / 2.0) /
                                                  (2.0 * kPi));
                    }
                    const double have = got.at(i, j, k);
                    const double rel = std::abs(have - want) / std::max(want, 1e-300);
                    worst = std::max(worst, rel);
                }
    }
    g.report(1, "encode-oracle", worst < 1e-12, "max rel dev " + fmt(worst), now_sec() - t0);
}

// 2: peak value and monotone decay of the Gaussian contribution.
void check_gaussian_values(Gate& g) {
    const double t0 = now_sec();
    const Point3 o{0, 0, 0};
    bool ok = std::abs(gaussian_contribution(o, o, 1.0) - 1.0 / (2.0 * kPi)) < 1e-12;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> rdist(0.0, 8.0);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        double dx = u(rng), dy = u(rng), dz = u(rng);
        const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (norm < 1e-9) continue;
        dx /= norm;
        dy /= norm;
        dz /= norm;
        double r1 = rdist(rng), r2 = rdist(rng);
        if (r1 > r2) std::swap(r1, r2);
        if (r2 - r1 < 1e-9) continue;
        const double v1 = gaussian_contribution(o, {r1 * dx, r1 * dy, r1 * dz}, 1.0);
        const double v2 = gaussian_contribution(o, {r2 * dx, r2 * dy, r2 * dz}, 1.0);
        ok = v1 > v2;
    }
    g.report(2, "gaussian-point-values", ok, ok ? "peak + monotone decay" : "violated",
             now_sec() - t0);
}

// 3: loss functions match scalar-loop oracles.
void check_loss_oracles(Gate& g) {
    const double t0 = now_sec();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> dim(1, 6);
    double worst = 0.0;
    bool lambda0_exact = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int levels = 1 + trial % 3;
        std::vector<Tensor> pred, target;
        double vox_ref = 0.0;
        for (int m = 0; m < levels; ++m) {
            std::vector<int> shape = {dim(rng), dim(rng), dim(rng)};
            Tensor p(shape), t(shape);
            for (std::int64_t i = 0; i < p.size(); ++i) {
                p[i] = u(rng);
                t[i] = u(rng);
                vox_ref += (p[i] - t[i]) * (p[i] - t[i]);
            }
            pred.push_back(std::move(p));
            target.push_back(std::move(t));
        }
        const int n = 3 * dim(rng);
        Tensor cp({n}), ct({n});
        double coord_ref = 0.0;
        for (int i = 0; i < n; ++i) {
            cp[i] = u(rng);
            ct[i] = u(rng);
            coord_ref += (cp[i] - ct[i]) * (cp[i] - ct[i]);
        }
        const double lambda = std::pow(10.0, -1.0 - trial % 4);
        const double joint_ref = vox_ref + lambda * coord_ref;
        auto rel = [](double a, double b) {
            return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
        };
        worst = std::max(worst, rel(voxel_loss(pred, target), vox_ref));
        worst = std::max(worst, rel(coord_loss(cp, ct), coord_ref));
        worst = std::max(worst, rel(joint_loss(pred, target, cp, ct, lambda), joint_ref));
        if (joint_loss(pred, target, cp, ct, 0.0) != voxel_loss(pred, target))
            lambda0_exact = false;
    }
    const bool ok = worst < 1e-10 && lambda0_exact;
    g.report(3, "loss-oracles", ok,
             "max rel dev " + fmt(worst) + (lambda0_exact ? ", lambda0 exact" : ", lambda0 off"),
             now_sec() - t0);
}

// 4: analytic gradients of the joint loss on the toy preset vs central
// finite differences, sampling elements from every parameter tensor.
void check_gradients(Gate& g) {
    const double t0 = now_sec();
    const auto hg = toy_hourglass_config();
    const auto cn = toy_coordnet_config();

    SyntheticSpec spec;
    spec.n_samples = 1;
    spec.image_size = 64;
    spec.seed = 11;
    const TrainSet data = prepare_train_set(generate_synthetic(spec), hg, 1.0);
    const TrainSample& s = data[0];
    Tensor image = Tensor::from({1, 3, 64, 64}, s.image.vec());
    std::vector<Tensor> targets;
    for (const auto& level : s.pyramid) {
        std::vector<int> sh = level.shape();
        targets.push_back(Tensor::from({1, sh[0], sh[1], sh[2]}, level.vec()));
    }
    Tensor coords = Tensor::from({1, static_cast<int>(s.coords.size())}, s.coords.vec());
    const double lambda = 1e-3;

    ModelState state;
    state.rng_seed = 21;
    ensure_initialized(state, hg, cn);

    auto loss_graph = [&](bool trainable) {
        GraphContext ctx(state, Mode{true, false}, trainable);
        auto preds = hourglass_graph(ctx, make_leaf(image), hg);
        VarPtr vol = nn::reshape(preds.back(), {1, 1, hg.d_max(), hg.out_h(), hg.out_w()});
        VarPtr pc = coordnet_graph(ctx, vol, cn);
        VarPtr l;
        for (std::size_t m = 0; m < preds.size(); ++m) {
            VarPtr term = nn::sum_sq_diff(preds[m], targets[m]);
            l = l ? nn::add(l, term) : term;
        }
        l = nn::add(l, nn::scale(nn::sum_sq_diff(pc, coords), lambda));
        return std::pair<VarPtr, GraphContext>(l, std::move(ctx));
    };

    auto [loss, ctx] = loss_graph(true);
    backward(loss);

    const double h = 1e-5;
    double worst = 0.0;
    std::string worst_name;
    std::mt19937_64 pick(4);
    int checked = 0;
    for (const auto& [name, var] : ctx.bound_params()) {
        Tensor& p = state.params.at(name);
        std::uniform_int_distribution<std::int64_t> idx(0, p.size() - 1);
        for (int rep = 0; rep < 2; ++rep) {
            const std::int64_t i = idx(pick);
            const double orig = p[i];
            p[i] = orig + h;
            const double fp = loss_graph(false).first->value[0];
            p[i] = orig - h;
            const double fm = loss_graph(false).first->value[0];
            p[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = var->grad[i];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
            if (rel > worst) {
                worst = rel;
                worst_name = name;
            }
            ++checked;
        }
    }
    const double dt = now_sec() - t0;
    const bool ok = worst < 1e-4 && dt < 300.0;
    g.report(4, "finite-difference-gradients", ok,
             fmt(checked) + " samples over " + fmt(static_cast<double>(ctx.bound_params().size())) +
                 " tensors, max rel dev " + fmt(worst) + " (" + worst_name + ")",
             dt);
}

// 5: two-stage overfit on 8 synthetic samples reaches sub-voxel accuracy
// for each lambda.
void check_overfit(Gate& g) {
    const double t0 = now_sec();
    const auto hg = toy_hourglass_config();
    const auto cn = toy_coordnet_config();

    SyntheticSpec spec;
    spec.n_samples = 8;
    spec.image_size = 64;
    spec.seed = 5;
    const std::vector<Sample> samples = generate_synthetic(spec);
    const TrainSet data = prepare_train_set(samples, hg, 1.0);

    TrainConfig cfg;
    cfg.batch_size = 8;          // one step per epoch -> epochs count steps
    cfg.lr_decay_every = 10000;  // constant rate for this short run
    cfg.lr_initial = 2.5e-4;
    cfg.epochs_pretrain = 200;

    ModelState base;
    base.rng_seed = 9;
    pretrain_voxel(data, base, cfg, hg);
    pretrain_coord(data, base, cfg, hg, cn);

    auto mean_error = [&](ModelState& state) {
        double total = 0.0;
        int count = 0;
        for (const auto& s : data) {
            Tensor image = Tensor::from({1, 3, 64, 64}, s.image.vec());
            auto [vols, pred] = model_forward(image, state, hg, cn);
            for (int i = 0; i * 3 + 2 < s.coords.size(); ++i) {
                const double dx = pred[3 * i] - s.coords[3 * i];
                const double dy = pred[3 * i + 1] - s.coords[3 * i + 1];
                const double dz = pred[3 * i + 2] - s.coords[3 * i + 2];
                total += std::sqrt(dx * dx + dy * dy + dz * dz);
                ++count;
            }
        }
        return total / count;
    };

    bool ok = true;
    std::string detail;
    for (double lambda : {1e-4, 1e-3, 1e-2}) {
        ModelState state = base;  // shared pretraining, per-lambda fine-tune
        TrainConfig ft = cfg;
        ft.lambda_coord = lambda;
        ft.epochs_finetune = 500;
        finetune_joint(data, state, ft, hg, cn);
        const double err = mean_error(state);
        detail += "lambda=" + fmt(lambda) + ": " + fmt(err) + " vox  ";
        ok = ok && err < 1.0;
    }
    const double dt = now_sec() - t0;
    g.report(5, "two-stage-overfit", ok && dt < 600.0, detail, dt);
}

// 6: encode -> decode recovers well-separated landmark sets.
void check_decode_roundtrip(Gate& g) {
    const double t0 = now_sec();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(1.5, 14.5);
    std::uniform_int_distribution<int> nd(2, 6);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int n = nd(rng);
        LandmarkSet lm;
        while (lm.count() < n) {
            Point3 c{u(rng), u(rng), u(rng)};
            bool far = true;
            for (const auto& p : lm.points) {
                const double dx = p.x - c.x, dy = p.y - c.y, dz = p.z - c.z;
                if (std::sqrt(dx * dx + dy * dy + dz * dz) < 6.0) far = false;
            }
            if (far) lm.points.push_back(c);
        }
        VoxelGrid grid = encode(lm, 16, 16, 16, 1.0, false);
        auto peaks = decode_peaks(grid, 1e-4, 3.0);
        if (static_cast<int>(peaks.size()) != n) {
            ok = false;
            break;
        }
        for (const auto& p : lm.points) {
            double best = 1e18;
            for (const auto& q : peaks) {
                const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
                best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
            }
            worst = std::max(worst, best);
            ok = ok && best < 0.5;
        }
    }
    g.report(6, "decode-roundtrip", ok, "worst match distance " + fmt(worst) + " vox",
             now_sec() - t0);
}

// 7: constructed metric cases and CED monotonicity.
void check_metric_oracles(Gate& g) {
    const double t0 = now_sec();
    LandmarkSet gt;
    gt.points = {{0, 0, 0}, {10, 0, 0}, {4, 7, 2}, {6, 1, 5}};
    LandmarkSet pred = gt;
    for (auto& p : pred.points) p.x += 1.0;
    const double gte_val = gte(pred, gt, 0, 1);
    bool ok = std::abs(gte_val - 10.0) < 1e-9;

    std::vector<Point3> gt2d = {{10, 10, 0}, {30, 40, 0}, {70, 20, 0}};
    std::vector<Point3> pred2d = gt2d;
    for (auto& p : pred2d) p.y += 2.0;
    const double nme_val = nme(pred2d, gt2d, Box2{0, 0, 100, 100});
    ok = ok && std::abs(nme_val - 2.0) < 1e-9;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        std::vector<double> errors;
        for (int i = 0; i < 1 + trial % 40; ++i) errors.push_back(u(rng));
        std::vector<double> th = {0.0};
        for (int i = 0; i < 10; ++i) th.push_back(th.back() + u(rng) / 8.0);
        auto f = ced_curve(errors, th);
        for (std::size_t i = 1; i < f.size(); ++i) ok = ok && f[i] >= f[i - 1];
        ok = ok && f.front() >= 0.0 && f.back() <= 1.0;
    }
    g.report(7, "metric-oracles", ok,
             "gte " + fmt(gte_val) + "%, nme " + fmt(nme_val) + "%, ced monotone",
             now_sec() - t0);
}

// 8: exact decay schedule and bit-identical reruns.
void check_schedule_determinism(Gate& g) {
    const double t0 = now_sec();
    TrainConfig cfg;
    bool ok = true;
    for (int epoch = 0; epoch < 45; ++epoch) {
        const double want = cfg.lr_initial * std::pow(10.0, -(epoch / 10));
        ok = ok && lr_at(cfg, epoch) == want;
    }

    SyntheticSpec spec;
    spec.n_samples = 4;
    spec.image_size = 64;
    spec.seed = 3;
    const TrainSet data = prepare_train_set(generate_synthetic(spec), toy_hourglass_config(), 1.0);
    TrainConfig small;
    small.epochs_pretrain = 3;
    small.epochs_finetune = 2;
    small.batch_size = 2;
    small.allow_skip_pretrain = true;
    auto run = [&]() {
        ModelState state;
        state.rng_seed = 31;
        std::string text = pretrain_voxel(data, state, small, toy_hourglass_config()).to_text();
        text += pretrain_coord(data, state, small, toy_hourglass_config(), toy_coordnet_config())
                    .to_text();
        text += finetune_joint(data, state, small, toy_hourglass_config(), toy_coordnet_config())
                    .to_text();
        return text;
    };
    const std::string a = run(), b = run();
    ok = ok && a == b && !a.empty();
    g.report(8, "schedule-and-determinism", ok,
             ok ? "exact decay, bit-identical logs" : "mismatch", now_sec() - t0);
}

// 9: full-scale preset emits 64x64x{1,2,4,64} volumes.
void check_paper_shapes(Gate& g) {
    const double t0 = now_sec();
    const auto hg = paper_hourglass_config();
    const auto cn = paper_coordnet_config();
    ModelState state;
    state.rng_seed = 1;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor image({1, 3, 256, 256});
    for (std::int64_t i = 0; i < image.size(); ++i) image[i] = u(rng);
    auto [vols, coords] = model_forward(image, state, hg, cn);
    bool ok = vols.size() == 4;
    const std::vector<int> depths = {1, 2, 4, 64};
    for (std::size_t m = 0; m < vols.size() && ok; ++m) {
        ok = vols[m].shape() == std::vector<int>{1, depths[m], 64, 64} && vols[m].all_finite();
    }
    ok = ok && coords.shape() == std::vector<int>{1, 204} && coords.all_finite();
    g.report(9, "full-scale-shape-contract", ok,
             ok ? "volumes 64x64x{1,2,4,64}, coords 3x68" : "shape mismatch", now_sec() - t0);
}

}  // namespace

int main(int argc, char** argv) {
    Gate gate;
    for (int i = 1; i < argc; ++i) gate.only.insert(std::atoi(argv[i]));
    if (gate.enabled(1)) check_encode_oracle(gate);
    if (gate.enabled(2)) check_gaussian_values(gate);
    if (gate.enabled(3)) check_loss_oracles(gate);
    if (gate.enabled(4)) check_gradients(gate);
    if (gate.enabled(5)) check_overfit(gate);
    if (gate.enabled(6)) check_decode_roundtrip(gate);
    if (gate.enabled(7)) check_metric_oracles(gate);
    if (gate.enabled(8)) check_schedule_determinism(gate);
    if (gate.enabled(9)) check_paper_shapes(gate);
    if (gate.failures == 0) {
        std::printf("all acceptance checks passed\n");
        return 0;
    }
    std::printf("%d acceptance check(s) failed\n", gate.failures);
    return 1;
}
