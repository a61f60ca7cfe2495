#ifndef CVR_NN_OPS_HPP_
#define CVR_NN_OPS_HPP_

#include "cvr/autograd.hpp"

namespace cvr::nn {

// x: (B,C,H,W), w: (Co,Ci,kh,kw), b: (Co)
VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride, int pad);

// x: (B,C,D,H,W), w: (Co,Ci,kd,kh,kw), b: (Co)
VarPtr conv3d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride, int pad);

// Normalizes over all dims except dim 1 (channels). In training mode the
// batch statistics are used and, when update_stats is set, folded into the
// running buffers; in inference mode the running buffers are used.
VarPtr batch_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                  Tensor* running_mean, Tensor* running_var,
                  bool training, bool update_stats,
                  double momentum = 0.1, double eps = 1e-5);

VarPtr leaky_relu(const VarPtr& x, double slope);
inline VarPtr relu(const VarPtr& x) { return leaky_relu(x, 0.0); }

VarPtr max_pool2d(const VarPtr& x, int k = 2);        // stride == k
VarPtr upsample_nearest2d(const VarPtr& x, int f = 2);

VarPtr add(const VarPtr& a, const VarPtr& b);
VarPtr scale(const VarPtr& x, double s);

// x: (B,F), w: (O,F), b: (O) -> (B,O)
VarPtr linear(const VarPtr& x, const VarPtr& w, const VarPtr& b);

VarPtr reshape(const VarPtr& x, std::vector<int> shape);
VarPtr global_avg_pool3d(const VarPtr& x);  // (B,C,D,H,W) -> (B,C)

// Scalar sum of squared differences against a constant target.
VarPtr sum_sq_diff(const VarPtr& pred, const Tensor& target);

}  // namespace cvr::nn

#endif  // CVR_NN_OPS_HPP_
