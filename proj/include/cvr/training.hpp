#ifndef CVR_TRAINING_HPP_
#define CVR_TRAINING_HPP_

#include <functional>
#include <string>
#include <vector>

#include "cvr/network.hpp"
#include "cvr/volumetric.hpp"

namespace cvr {

struct TrainConfig {
    double lambda_coord = 1e-3;
    double lr_initial = 2.5e-4;
    double lr_decay_factor = 10.0;
    int lr_decay_every = 10;  // epochs
    int epochs_pretrain = 15;
    int epochs_finetune = 10;
    int batch_size = 6;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    bool normalize_losses = false;  // Eq-style sums by default
    bool decay_per_stage = true;    // restart the lr schedule at each stage
    bool allow_skip_pretrain = false;
    int checkpoint_every = 0;  // epochs; 0 disables

    void validate() const;
};

struct TrainRecord {
    int step = 0;
    std::string stage;
    double l_vox = 0.0, l_coord = 0.0, l_total = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
    double wall_time_sec = 0.0;
    std::string to_text() const;
};

void save_train_log(const std::string& path, const TrainLog& log);

// Closed-form schedule: lr_initial * decay_factor^(-floor(epoch / decay_every)).
double lr_at(const TrainConfig& cfg, int epoch);

// --- Losses ---------------------------------------------------------------
// Sum-of-squares forms; set normalize to divide by the element count.

double voxel_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                  bool normalize = false);
double voxel_loss(const std::vector<Tensor>& pred, const VolumePyramid& target,
                  bool normalize = false);
double coord_loss(const Tensor& pred, const Tensor& target, bool normalize = false);
double joint_loss(const std::vector<Tensor>& pred_volumes,
                  const std::vector<Tensor>& target_volumes,
                  const Tensor& pred_coords, const Tensor& target_coords,
                  double lambda_coord, bool normalize = false);

Tensor grid_to_tensor(const VoxelGrid& grid);  // -> (d,h,w)

// --- Optimizer ------------------------------------------------------------

// RMS-propagation with smoothing 0.99 and epsilon 1e-8.
class RmsProp {
public:
    explicit RmsProp(double rho = 0.99, double eps = 1e-8) : rho_(rho), eps_(eps) {}
    void step(ModelState& state, const std::map<std::string, VarPtr>& bound, double lr);

private:
    double rho_, eps_;
    std::map<std::string, Tensor> cache_;
};

// --- Two-stage training ---------------------------------------------------

struct TrainSample {
    Tensor image;                 // (3,H,W)
    std::vector<Tensor> pyramid;  // per level, (d_m,h,w)
    Tensor coords;                // (3N) in volume coordinates
};
using TrainSet = std::vector<TrainSample>;

using EpochCallback = std::function<void(int epoch, const ModelState& state)>;

TrainLog pretrain_voxel(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg,
                        const EpochCallback& on_epoch = nullptr);
TrainLog pretrain_coord(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg,
                        const EpochCallback& on_epoch = nullptr);
TrainLog finetune_joint(const TrainSet& data, ModelState& state, const TrainConfig& cfg,
                        const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg,
                        const EpochCallback& on_epoch = nullptr);

KvMap train_config_kv(const TrainConfig& cfg);
TrainConfig train_config_from_kv(const KvMap& kv);

}  // namespace cvr

#endif  // CVR_TRAINING_HPP_
