#include "cvr/metrics.hpp"

#include <cmath>
#include <fstream>

#include "cvr/tensor.hpp"

namespace cvr {

double gte(const LandmarkSet& pred, const LandmarkSet& gt,
           int left_eye_outer_idx, int right_eye_outer_idx, bool normalizer_2d) {
    pred.validate();
    gt.validate();
    const int n = gt.count();
    check_arg(pred.count() == n, "gte: landmark count mismatch");
    check_arg(left_eye_outer_idx >= 0 && left_eye_outer_idx < n &&
              right_eye_outer_idx >= 0 && right_eye_outer_idx < n,
              "gte: eye index out of range");
    const Point3& l = gt.points[static_cast<std::size_t>(left_eye_outer_idx)];
    const Point3& r = gt.points[static_cast<std::size_t>(right_eye_outer_idx)];
    const double ex = l.x - r.x, ey = l.y - r.y, ez = l.z - r.z;
    const double interocular = normalizer_2d ? std::sqrt(ex * ex + ey * ey)
                                             : std::sqrt(ex * ex + ey * ey + ez * ez);
    check_arg(interocular > 0.0, "gte: degenerate interocular distance");
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point3& a = pred.points[static_cast<std::size_t>(i)];
        const Point3& b = gt.points[static_cast<std::size_t>(i)];
        const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        sum += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return 100.0 * (sum / n) / interocular;
}

double nme(const std::vector<Point3>& pred2d, const std::vector<Point3>& gt2d,
           const Box2& bbox) {
    check_arg(!gt2d.empty(), "nme: empty landmark list");
    check_arg(pred2d.size() == gt2d.size(), "nme: landmark count mismatch");
    check_arg(bbox.area() > 0.0, "nme: bbox must have positive area");
    double sum = 0.0;
    for (std::size_t i = 0; i < gt2d.size(); ++i) {
        const double dx = pred2d[i].x - gt2d[i].x, dy = pred2d[i].y - gt2d[i].y;
        sum += std::sqrt(dx * dx + dy * dy);
    }
    return 100.0 * (sum / static_cast<double>(gt2d.size())) / std::sqrt(bbox.area());
}

std::vector<double> ced_curve(const std::vector<double>& errors,
                              const std::vector<double>& thresholds) {
    check_arg(!errors.empty(), "ced_curve: empty error list");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        check_arg(thresholds[i] >= thresholds[i - 1], "ced_curve: thresholds must ascend");
    std::vector<double> fractions;
    fractions.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t c = 0;
        for (double e : errors)
            if (e <= t) ++c;
        fractions.push_back(static_cast<double>(c) / static_cast<double>(errors.size()));
    }
    return fractions;
}

std::optional<YawBucket> yaw_bucket_of(double abs_yaw_deg) {
    const double y = std::abs(abs_yaw_deg);
    if (y < 30.0) return YawBucket::kLow;
    if (y < 60.0) return YawBucket::kMid;
    if (y <= 90.0) return YawBucket::kHigh;
    return std::nullopt;
}

PoseBucketedNme pose_bucketed_nme(const std::vector<double>& nme_percent,
                                  const std::vector<YawBucket>& buckets) {
    check_arg(nme_percent.size() == buckets.size(), "pose_bucketed_nme: size mismatch");
    double sums[3] = {0, 0, 0};
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        const int b = static_cast<int>(buckets[i]);
        sums[b] += nme_percent[i];
        counts[b] += 1;
    }
    PoseBucketedNme out;
    std::vector<double> means;
    for (int b = 0; b < 3; ++b)
        if (counts[b] > 0) {
            out.bucket_mean[b] = sums[b] / static_cast<double>(counts[b]);
            means.push_back(*out.bucket_mean[b]);
        }
    check_arg(!means.empty(), "pose_bucketed_nme: no samples");
    double m = 0.0;
    for (double v : means) m += v;
    m /= static_cast<double>(means.size());
    out.mean = m;
    if (means.size() > 1) {
        double s = 0.0;
        for (double v : means) s += (v - m) * (v - m);
        out.stddev = std::sqrt(s / static_cast<double>(means.size() - 1));
    }
    return out;
}

namespace {

void mean_std(const std::vector<double>& v, double* mean, double* sd) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    *mean = m;
    *sd = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

void save_metric_report(const std::string& path, const MetricReport& r) {
    std::ofstream f(path);
    check_state(f.good(), "cannot open for writing: " + path);
    f.precision(17);
    f << "# sample_id gte_percent nme_percent\n";
    for (const auto& s : r.per_sample)
        f << s.sample_id << " " << s.gte_percent << " " << s.nme_percent << "\n";
    f << "# aggregate gte_mean=" << r.gte_mean << " gte_std=" << r.gte_std
      << " nme_mean=" << r.nme_mean << " nme_std=" << r.nme_std << "\n";
    check_state(f.good(), "write failed: " + path);
}

void save_ced_data(const std::string& path, const MetricReport& r) {
    std::ofstream f(path);
    check_state(f.good(), "cannot open for writing: " + path);
    f.precision(17);
    for (std::size_t i = 0; i < r.ced_thresholds.size(); ++i)
        f << r.ced_thresholds[i] << " " << r.ced_fractions[i] << "\n";
    check_state(f.good(), "write failed: " + path);
}

void finalize_aggregates(MetricReport& r) {
    check_arg(!r.per_sample.empty(), "metric report has no samples");
    std::vector<double> g, n;
    for (const auto& s : r.per_sample) {
        g.push_back(s.gte_percent);
        n.push_back(s.nme_percent);
    }
    mean_std(g, &r.gte_mean, &r.gte_std);
    mean_std(n, &r.nme_mean, &r.nme_std);
    if (!r.ced_thresholds.empty()) r.ced_fractions = ced_curve(g, r.ced_thresholds);
}

}  // namespace cvr
