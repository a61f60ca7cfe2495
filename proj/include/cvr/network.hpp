#ifndef CVR_NETWORK_HPP_
#define CVR_NETWORK_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvr/kvconfig.hpp"
#include "cvr/nn_ops.hpp"

namespace cvr {

struct HourglassStackConfig {
    int num_modules = 2;
    int input_h = 64, input_w = 64;
    int base_channels = 16;
    std::vector<int> z_resolutions = {1, 16};
    int downsample_depth = 2;

    int out_w() const { return input_w / 4; }
    int out_h() const { return input_h / 4; }
    int d_max() const { return z_resolutions.back(); }
    void validate() const;
};

struct CoordNetConfig {
    int num_conv_layers = 5;
    std::vector<int> channel_plan = {32, 64, 128, 128, 128};
    std::vector<int> strides = {1, 2, 2, 2, 1};
    double leaky_slope = 0.01;
    int num_landmarks = 68;
    bool global_pool = true;

    int output_dim() const { return 3 * num_landmarks; }
    void validate() const;
};

HourglassStackConfig toy_hourglass_config();
HourglassStackConfig paper_hourglass_config();
CoordNetConfig toy_coordnet_config();
CoordNetConfig paper_coordnet_config();

// All learnable tensors of the voxel subnetwork (names under "g.") and the
// coordinate subnetwork (names under "p."), plus batch-norm running stats.
struct ModelState {
    std::map<std::string, Tensor> params;
    std::map<std::string, Tensor> buffers;
    std::uint64_t rng_seed = 0;
    std::string version = "cvr-ckpt-1";
    std::string scheme_id = "toy12";
    bool pretrained_voxel = false;
    bool pretrained_coord = false;
};

struct Mode {
    bool training = false;
    bool update_stats = false;  // fold batch stats into running buffers
};

// Binds graph parameter leaves to ModelState tensors for one forward pass.
// Parameters are created on first use with a deterministic per-name seed;
// existing parameters are shape-checked.
class GraphContext {
public:
    GraphContext(ModelState& state, Mode mode, bool trainable);

    enum class Init { kFanInUniform, kZeros, kOnes };
    VarPtr param(const std::string& name, std::vector<int> shape, Init init,
                 std::int64_t fan_in = 0);
    Tensor* buffer(const std::string& name, int size, double init_value);

    const Mode& mode() const { return mode_; }
    bool trainable() const { return trainable_; }
    const std::map<std::string, VarPtr>& bound_params() const { return bound_; }
    ModelState& state() { return state_; }

private:
    ModelState& state_;
    Mode mode_;
    bool trainable_;
    std::map<std::string, VarPtr> bound_;
};

// Graph builders (used by training and by the plain wrappers below).
std::vector<VarPtr> hourglass_graph(GraphContext& ctx, const VarPtr& image,
                                    const HourglassStackConfig& cfg);
// volume: (B,1,D,H,W) -> (B,3N)
VarPtr coordnet_graph(GraphContext& ctx, const VarPtr& volume,
                      const CoordNetConfig& cfg);

// Plain forward passes. Outputs of the voxel subnetwork are (B,d_m,H/4,W/4)
// tensors with channels interpreted as the volume's z axis.
std::vector<Tensor> hourglass_forward(const Tensor& image, ModelState& state,
                                      const HourglassStackConfig& cfg,
                                      bool training = false);
Tensor coordnet_forward(const Tensor& volume, ModelState& state,
                        const CoordNetConfig& cfg, bool training = false);
std::pair<std::vector<Tensor>, Tensor> model_forward(const Tensor& image,
                                                     ModelState& state,
                                                     const HourglassStackConfig& hg_cfg,
                                                     const CoordNetConfig& cn_cfg,
                                                     bool training = false);

// Creates every parameter of both subnetworks (no-op for existing ones).
void ensure_initialized(ModelState& state, const HourglassStackConfig& hg_cfg,
                        const CoordNetConfig& cn_cfg);

// Versioned checkpoint container: config echo + named tensors.
void save_checkpoint(const std::string& path, const ModelState& state,
                     const HourglassStackConfig& hg_cfg, const CoordNetConfig& cn_cfg);
struct Checkpoint {
    ModelState state;
    HourglassStackConfig hg_cfg;
    CoordNetConfig cn_cfg;
};
Checkpoint load_checkpoint(const std::string& path);

KvMap hourglass_config_kv(const HourglassStackConfig& cfg);
KvMap coordnet_config_kv(const CoordNetConfig& cfg);
HourglassStackConfig hourglass_config_from_kv(const KvMap& kv);
CoordNetConfig coordnet_config_from_kv(const KvMap& kv);

}  // namespace cvr

#endif  // CVR_NETWORK_HPP_
