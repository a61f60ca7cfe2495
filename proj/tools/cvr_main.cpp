// Command-line front end: synthesize data, encode volumes, train, evaluate
// and predict. All outputs are written to a temp file first and renamed so a
// failed run never leaves a partial file behind.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cvr/data.hpp"
#include "cvr/metrics.hpp"
#include "cvr/training.hpp"

namespace fs = std::filesystem;
using namespace cvr;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingInput = 2;

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_exists(const std::string& path) {
    if (!fs::exists(path)) throw MissingInput("input not found: " + path);
}

template <typename Fn>
void atomic_write(const std::string& path, Fn&& writer) {
    const std::string tmp = path + ".tmp";
    writer(tmp);
    fs::rename(tmp, path);
}

std::vector<int> parse_dims(const std::string& s) {
    std::vector<int> dims;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) dims.push_back(std::stoi(part));
    check_arg(dims.size() == 3, "expected dims as w,h,d");
    return dims;
}

Box2 parse_bbox(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) v.push_back(std::stod(part));
    check_arg(v.size() == 4, "expected bbox as x0,y0,x1,y1");
    return Box2{v[0], v[1], v[2], v[3]};
}

// Maximum-intensity projections of a (d,h,w) volume along each axis.
void render_mips(const std::string& prefix, const Tensor& vol) {
    check_arg(vol.ndim() == 3, "mip render expects a (d,h,w) volume");
    const int d = vol.dim(0), h = vol.dim(1), w = vol.dim(2);
    double vmax = 0.0;
    for (std::int64_t i = 0; i < vol.size(); ++i) vmax = std::max(vmax, vol[i]);
    auto at = [&](int k, int j, int i) { return vol[(static_cast<std::int64_t>(k) * h + j) * w + i]; };

    std::vector<double> z(static_cast<std::size_t>(h) * w, 0.0);
    std::vector<double> y(static_cast<std::size_t>(d) * w, 0.0);
    std::vector<double> x(static_cast<std::size_t>(d) * h, 0.0);
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                const double v = at(k, j, i);
                z[static_cast<std::size_t>(j) * w + i] = std::max(z[static_cast<std::size_t>(j) * w + i], v);
                y[static_cast<std::size_t>(k) * w + i] = std::max(y[static_cast<std::size_t>(k) * w + i], v);
                x[static_cast<std::size_t>(k) * h + j] = std::max(x[static_cast<std::size_t>(k) * h + j], v);
            }
    atomic_write(prefix + "_mip_z.pgm",
                 [&](const std::string& p) { save_pgm(p, z.data(), h, w, 0.0, vmax); });
    atomic_write(prefix + "_mip_y.pgm",
                 [&](const std::string& p) { save_pgm(p, y.data(), d, w, 0.0, vmax); });
    atomic_write(prefix + "_mip_x.pgm",
                 [&](const std::string& p) { save_pgm(p, x.data(), d, h, 0.0, vmax); });
}

void render_overlay(const std::string& path, const Image& image, const LandmarkSet& lm) {
    Image out = image;
    for (const auto& p : lm.points) {
        const int cx = static_cast<int>(std::lround(p.x));
        const int cy = static_cast<int>(std::lround(p.y));
        for (int o = -2; o <= 2; ++o) {
            for (auto [px, py] : {std::pair{cx + o, cy}, std::pair{cx, cy + o}}) {
                if (px < 0 || px >= out.width() || py < 0 || py >= out.height()) continue;
                out.at(0, py, px) = 1.0;
                out.at(1, py, px) = 0.0;
                out.at(2, py, px) = 0.0;
            }
        }
    }
    atomic_write(path, [&](const std::string& p) { save_ppm(p, out); });
}

LandmarkSet coords_to_landmarks(const Tensor& coords, const std::string& scheme) {
    const std::int64_t n3 = coords.size();
    check_arg(n3 % 3 == 0, "coordinate vector length must be a multiple of 3");
    LandmarkSet lm;
    lm.scheme_id = scheme_registered(scheme) ? scheme : "";
    for (std::int64_t i = 0; i + 2 < n3; i += 3)
        lm.points.push_back({coords[i], coords[i + 1], coords[i + 2]});
    return lm;
}

struct RunConfig {
    HourglassStackConfig hg;
    CoordNetConfig cn;
    TrainConfig train;
    double depth_extent_factor = 1.0;
};

RunConfig resolve_config(const std::string& preset, const std::string& config_path) {
    RunConfig rc;
    if (preset == "toy") {
        rc.hg = toy_hourglass_config();
        rc.cn = toy_coordnet_config();
    } else if (preset == "paper") {
        rc.hg = paper_hourglass_config();
        rc.cn = paper_coordnet_config();
    } else {
        throw std::invalid_argument("unknown preset: " + preset);
    }
    KvMap kv = hourglass_config_kv(rc.hg);
    for (const auto& [k, v] : coordnet_config_kv(rc.cn)) kv[k] = v;
    for (const auto& [k, v] : train_config_kv(rc.train)) kv[k] = v;
    if (!config_path.empty()) {
        require_exists(config_path);
        std::ifstream f(config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        for (const auto& [k, v] : parse_kv_text(ss.str())) kv[k] = v;
    }
    rc.hg = hourglass_config_from_kv(kv);
    rc.cn = coordnet_config_from_kv(kv);
    rc.train = train_config_from_kv(kv);
    rc.depth_extent_factor = kv_double(kv, "data.depth_extent_factor", 1.0);
    return rc;
}

void write_config_echo(const std::string& path, const RunConfig& rc) {
    KvMap kv = hourglass_config_kv(rc.hg);
    for (const auto& [k, v] : coordnet_config_kv(rc.cn)) kv[k] = v;
    for (const auto& [k, v] : train_config_kv(rc.train)) kv[k] = v;
    std::ostringstream num;
    num.precision(17);
    num << rc.depth_extent_factor;
    kv["data.depth_extent_factor"] = num.str();
    atomic_write(path, [&](const std::string& p) {
        std::ofstream f(p);
        check_state(f.good(), "cannot open for writing: " + p);
        for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
    });
}

// --- subcommands -----------------------------------------------------------

int cmd_synth(const std::string& out_dir, int n, int size, std::uint64_t seed,
              const std::string& scheme) {
    SyntheticSpec spec;
    spec.scheme_id = scheme;
    spec.n_samples = n;
    spec.image_size = size;
    spec.seed = seed;
    save_dataset(out_dir, generate_synthetic(spec));
    std::cout << "wrote " << n << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_encode(const std::string& input, const std::string& out, const std::string& dims,
               double sigma, bool no_truncation, const std::string& render_prefix) {
    require_exists(input);
    const LandmarkSet lm = load_landmarks(input);  // volume-space coordinates
    const std::vector<int> d = parse_dims(dims);
    const VoxelGrid grid = encode(lm, d[0], d[1], d[2], sigma, !no_truncation);
    atomic_write(out, [&](const std::string& p) { save_voxel_grid(p, grid); });
    if (!render_prefix.empty()) render_mips(render_prefix, grid_to_tensor(grid));
    std::cout << "encoded " << lm.count() << " landmarks into " << out << "\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              const std::string& config_path, const std::string& stage,
              const std::string& preset, std::int64_t seed_flag) {
    require_exists(data_dir);
    RunConfig rc = resolve_config(preset, config_path);
    if (seed_flag >= 0) rc.train.seed = static_cast<std::uint64_t>(seed_flag);
    fs::create_directories(out_dir);

    const std::string ckpt_path = (fs::path(out_dir) / "model.cvrk").string();
    ModelState state;
    if (fs::exists(ckpt_path)) {
        Checkpoint ck = load_checkpoint(ckpt_path);
        state = std::move(ck.state);
        rc.hg = ck.hg_cfg;
        rc.cn = ck.cn_cfg;
        std::cout << "resuming from " << ckpt_path << "\n";
    } else {
        state.rng_seed = rc.train.seed;
    }

    const std::vector<Sample> samples = load_dataset(data_dir);
    check_state(!samples.empty(), "dataset is empty: " + data_dir);
    if (!samples[0].landmarks.scheme_id.empty()) state.scheme_id = samples[0].landmarks.scheme_id;
    const TrainSet ts = prepare_train_set(samples, rc.hg, rc.train.sigma,
                                          rc.depth_extent_factor);
    write_config_echo((fs::path(out_dir) / "config.txt").string(), rc);

    auto save_state = [&]() {
        atomic_write(ckpt_path,
                     [&](const std::string& p) { save_checkpoint(p, state, rc.hg, rc.cn); });
    };
    auto run_one = [&](const std::string& name) {
        TrainLog log;
        if (name == "pretrain-voxel")
            log = pretrain_voxel(ts, state, rc.train, rc.hg);
        else if (name == "pretrain-coord")
            log = pretrain_coord(ts, state, rc.train, rc.hg, rc.cn);
        else if (name == "finetune")
            log = finetune_joint(ts, state, rc.train, rc.hg, rc.cn);
        else
            throw std::invalid_argument("unknown stage: " + name);
        save_state();  // after the stage so a NaN abort keeps the last good file
        atomic_write((fs::path(out_dir) / ("log_" + name + ".txt")).string(),
                     [&](const std::string& p) { save_train_log(p, log); });
        std::cout << "stage " << name << ": " << log.records.size() << " steps, final loss "
                  << (log.records.empty() ? 0.0 : log.records.back().l_total) << "\n";
    };

    if (stage == "all") {
        run_one("pretrain-voxel");
        run_one("pretrain-coord");
        run_one("finetune");
    } else {
        run_one(stage);
    }
    return 0;
}

// Runs the full model on one sample and returns image-space landmarks.
LandmarkSet predict_sample(const Image& image, const Box2& bbox, ModelState& state,
                           const HourglassStackConfig& hg, const CoordNetConfig& cn,
                           double depth_extent_factor) {
    Tensor input({1, 3, image.height(), image.width()});
    std::copy(image.data.vec().begin(), image.data.vec().end(), input.vec().begin());
    auto [vols, coords] = model_forward(input, state, hg, cn);
    Tensor flat(std::vector<int>{static_cast<int>(coords.size())});
    std::copy(coords.vec().begin(), coords.vec().end(), flat.vec().begin());
    LandmarkSet vol_lm = coords_to_landmarks(flat, state.scheme_id);
    const CubeMapping m =
        mapping_for(bbox, hg.out_w(), hg.out_h(), hg.d_max(), depth_extent_factor);
    return map_to_image(vol_lm, m);
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& out_dir, bool normalizer_2d, double depth_extent_factor) {
    require_exists(ckpt_path);
    require_exists(data_dir);
    Checkpoint ck = load_checkpoint(ckpt_path);
    const std::vector<Sample> samples = load_dataset(data_dir);
    check_state(!samples.empty(), "dataset is empty: " + data_dir);
    const LandmarkScheme& scheme = scheme_registry(ck.state.scheme_id);
    fs::create_directories(out_dir);

    MetricReport report;
    for (double t = 0.0; t <= 25.0 + 1e-9; t += 0.5) report.ced_thresholds.push_back(t);
    std::vector<double> nmes;
    std::vector<YawBucket> buckets;
    bool all_yaw = true;
    for (const auto& s : samples) {
        check_state(s.landmarks.scheme_id.empty() ||
                        s.landmarks.scheme_id == ck.state.scheme_id,
                    "sample " + s.sample_id + ": scheme " + s.landmarks.scheme_id +
                        " does not match checkpoint scheme " + ck.state.scheme_id);
        check_state(s.landmarks.count() == scheme.n,
                    "sample " + s.sample_id + ": landmark count mismatch");
        LandmarkSet pred = predict_sample(s.image, s.bbox, ck.state, ck.hg_cfg, ck.cn_cfg,
                                          depth_extent_factor);
        MetricReport::PerSample ps;
        ps.sample_id = s.sample_id;
        ps.gte_percent = gte(pred, s.landmarks, scheme.left_eye_outer,
                             scheme.right_eye_outer, normalizer_2d);
        ps.nme_percent = nme(pred.points, s.landmarks.points, s.bbox);
        report.per_sample.push_back(ps);
        nmes.push_back(ps.nme_percent);
        if (s.yaw_deg) {
            auto b = yaw_bucket_of(*s.yaw_deg);
            if (b)
                buckets.push_back(*b);
            else
                all_yaw = false;
        } else {
            all_yaw = false;
        }
    }
    finalize_aggregates(report);
    atomic_write((fs::path(out_dir) / "report.txt").string(),
                 [&](const std::string& p) { save_metric_report(p, report); });
    atomic_write((fs::path(out_dir) / "ced.txt").string(),
                 [&](const std::string& p) { save_ced_data(p, report); });
    if (all_yaw) {
        const PoseBucketedNme pb = pose_bucketed_nme(nmes, buckets);
        atomic_write((fs::path(out_dir) / "pose_nme.txt").string(), [&](const std::string& p) {
            std::ofstream f(p);
            check_state(f.good(), "cannot open for writing: " + p);
            f.precision(17);
            const char* names[3] = {"yaw_0_30", "yaw_30_60", "yaw_60_90"};
            for (int b = 0; b < 3; ++b)
                if (pb.bucket_mean[b]) f << names[b] << " = " << *pb.bucket_mean[b] << "\n";
            f << "mean = " << pb.mean << "\nstd = " << pb.stddev << "\n";
        });
    }
    std::cout << "evaluated " << samples.size() << " samples: gte_mean=" << report.gte_mean
              << "% nme_mean=" << report.nme_mean << "%\n";
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& image_path,
                const std::string& out_prefix, const std::string& bbox_str, bool render,
                double depth_extent_factor) {
    require_exists(ckpt_path);
    require_exists(image_path);
    Checkpoint ck = load_checkpoint(ckpt_path);
    const Image image = load_ppm(image_path);
    const Box2 bbox = bbox_str.empty() ? Box2{0.0, 0.0, static_cast<double>(image.width()),
                                              static_cast<double>(image.height())}
                                       : parse_bbox(bbox_str);

    Tensor input({1, 3, image.height(), image.width()});
    std::copy(image.data.vec().begin(), image.data.vec().end(), input.vec().begin());
    auto [vols, coords] = model_forward(input, ck.state, ck.hg_cfg, ck.cn_cfg);
    Tensor flat(std::vector<int>{static_cast<int>(coords.size())});
    std::copy(coords.vec().begin(), coords.vec().end(), flat.vec().begin());
    LandmarkSet vol_lm = coords_to_landmarks(flat, ck.state.scheme_id);
    const CubeMapping m = mapping_for(bbox, ck.hg_cfg.out_w(), ck.hg_cfg.out_h(),
                                      ck.hg_cfg.d_max(), depth_extent_factor);
    const LandmarkSet img_lm = map_to_image(vol_lm, m);

    atomic_write(out_prefix + ".pts3",
                 [&](const std::string& p) { save_landmarks(p, img_lm); });
    if (render) {
        const Tensor& last = vols.back();
        Tensor vol3 = Tensor::from({last.dim(1), last.dim(2), last.dim(3)}, last.vec());
        render_mips(out_prefix, vol3);
        render_overlay(out_prefix + "_overlay.ppm", image, img_lm);
    }
    std::cout << "wrote " << img_lm.count() << " landmarks to " << out_prefix << ".pts3\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D landmark localization: volume encoding, training, evaluation"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out, synth_scheme = "toy12";
    int synth_n = 8, synth_size = 64;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n", synth_n, "number of samples");
    synth->add_option("--size", synth_size, "image size in pixels");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--scheme", synth_scheme, "landmark scheme id");

    auto* enc = app.add_subcommand("encode", "encode a landmark file into a voxel grid");
    std::string enc_in, enc_out, enc_dims = "16,16,16", enc_render;
    double enc_sigma = 1.0;
    bool enc_notrunc = false;
    enc->add_option("--input", enc_in, "landmark .pts3 file (volume coordinates)")->required();
    enc->add_option("--out", enc_out, "output voxel grid file")->required();
    enc->add_option("--dims", enc_dims, "grid dims as w,h,d");
    enc->add_option("--sigma", enc_sigma, "Gaussian sigma in voxels");
    enc->add_flag("--no-truncation", enc_notrunc, "disable the 3-sigma cutoff");
    enc->add_option("--render", enc_render, "prefix for per-axis projection images");

    auto* tr = app.add_subcommand("train", "run the two-stage training pipeline");
    std::string tr_data, tr_out, tr_config, tr_stage = "all", tr_preset = "toy";
    std::int64_t tr_seed = -1;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_option("--config", tr_config, "key=value config file");
    tr->add_option("--stage", tr_stage, "pretrain-voxel|pretrain-coord|finetune|all");
    tr->add_option("--preset", tr_preset, "toy|paper");
    tr->add_option("--seed", tr_seed, "override the training seed");

    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_data, ev_out;
    bool ev_2d = false;
    double ev_depth = 1.0;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_flag("--normalizer-2d", ev_2d, "use the 2D eye-corner distance");
    ev->add_option("--depth-extent", ev_depth, "depth extent factor");

    auto* pr = app.add_subcommand("predict", "predict landmarks for one image");
    std::string pr_ckpt, pr_image, pr_out, pr_bbox;
    bool pr_render = false;
    double pr_depth = 1.0;
    pr->add_option("--ckpt", pr_ckpt, "checkpoint file")->required();
    pr->add_option("--image", pr_image, "input image (PPM)")->required();
    pr->add_option("--out", pr_out, "output prefix")->required();
    pr->add_option("--bbox", pr_bbox, "face box as x0,y0,x1,y1 (default: full image)");
    pr->add_flag("--render", pr_render, "write projection and overlay images");
    pr->add_option("--depth-extent", pr_depth, "depth extent factor");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(synth_out, synth_n, synth_size, synth_seed, synth_scheme);
        if (*enc) return cmd_encode(enc_in, enc_out, enc_dims, enc_sigma, enc_notrunc, enc_render);
        if (*tr) return cmd_train(tr_data, tr_out, tr_config, tr_stage, tr_preset, tr_seed);
        if (*ev) return cmd_evaluate(ev_ckpt, ev_data, ev_out, ev_2d, ev_depth);
        if (*pr) return cmd_predict(pr_ckpt, pr_image, pr_out, pr_bbox, pr_render, pr_depth);
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
