#ifndef CVR_METRICS_HPP_
#define CVR_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cvr/geometry.hpp"
#include "cvr/landmarks.hpp"

namespace cvr {

struct MetricReport {
    struct PerSample {
        std::string sample_id;
        double gte_percent = 0.0;
        double nme_percent = 0.0;
    };
    std::vector<PerSample> per_sample;
    double gte_mean = 0.0, gte_std = 0.0;
    double nme_mean = 0.0, nme_std = 0.0;
    std::vector<double> ced_thresholds;
    std::vector<double> ced_fractions;  // of the GTE errors
};

// Mean 3D point-to-point error normalized by the outer eye-corner distance,
// in percent. The normalizer uses the 3D distance by default; set
// normalizer_2d to use only x,y.
double gte(const LandmarkSet& pred, const LandmarkSet& gt,
           int left_eye_outer_idx, int right_eye_outer_idx,
           bool normalizer_2d = false);

// Mean 2D point-to-point error normalized by sqrt(bbox area), in percent.
double nme(const std::vector<Point3>& pred2d, const std::vector<Point3>& gt2d,
           const Box2& bbox);

// Fraction of errors <= threshold, per threshold (thresholds ascending).
std::vector<double> ced_curve(const std::vector<double>& errors,
                              const std::vector<double>& thresholds);

// Absolute-yaw buckets [0,30), [30,60), [60,90].
enum class YawBucket { kLow = 0, kMid = 1, kHigh = 2 };
std::optional<YawBucket> yaw_bucket_of(double abs_yaw_deg);

struct PoseBucketedNme {
    std::optional<double> bucket_mean[3];
    // Mean/std across the present bucket means (sample std, n-1 denominator).
    double mean = 0.0;
    double stddev = 0.0;
};

PoseBucketedNme pose_bucketed_nme(const std::vector<double>& nme_percent,
                                  const std::vector<YawBucket>& buckets);

// Fills aggregate means/stds and the CED fractions from per_sample entries.
void finalize_aggregates(MetricReport& r);

void save_metric_report(const std::string& path, const MetricReport& r);
void save_ced_data(const std::string& path, const MetricReport& r);

}  // namespace cvr

#endif  // CVR_METRICS_HPP_
