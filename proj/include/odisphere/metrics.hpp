#pragma once

// Sphere-uniform saliency metrics. Every statistic over an ERP map is weighted
// by per-pixel solid angle, which is what uniform sampling on the sphere
// converges to.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "odisphere/raster.hpp"

namespace odisphere {

struct Fixation {
    double azimuth = 0.0;    // radians
    double elevation = 0.0;  // radians
    double weight = 1.0;
};

struct FixationSet {
    std::vector<Fixation> points;

    bool empty() const { return points.empty(); }
};

/// UTF-8 CSV `azimuth_deg,elevation_deg[,weight]`, one fixation per line.
/// Blank lines and lines starting with '#' are skipped.
FixationSet load_fixations_csv(const std::filesystem::path& path);
FixationSet parse_fixations_csv(const std::string& text);

/// Mean z-score (solid-angle-weighted mean and std) sampled bilinearly at the
/// fixations. Throws DegenerateInputError for constant maps or no fixations.
double nss(const Raster& map, const FixationSet& fix);

/// AUC-Judd: thresholds at the saliency of each fixated pixel, TPR over
/// fixations, FPR as the solid-angle fraction of non-fixated pixels at or
/// above the threshold, trapezoidal area. Ties share a threshold.
double auc_judd(const Raster& map, const FixationSet& fix);

/// Solid-angle-weighted Pearson correlation.
double cc(const Raster& a, const Raster& b);

enum class KldDirection {
    gt_to_pred,  // KLD(gt || pred)
    pred_to_gt
};

/// KL divergence between the solid-angle-weighted L1-normalized maps.
double kld_metric(const Raster& pred, const Raster& gt, KldDirection dir = KldDirection::gt_to_pred,
                  double eps = 1e-8);

struct BandNss {
    double center;  // radians
    double nss;
};

/// NSS over fixations grouped in elevation bands of `band_width` radians from
/// -pi/2; the z-scoring stays global. Empty bands are omitted.
std::vector<BandNss> nss_by_elevation(const Raster& map, const FixationSet& fix, double band_width);

struct MetricReport {
    std::optional<double> nss;
    std::optional<double> auc;
    std::optional<double> cc;
    std::optional<double> kld;
    std::vector<BandNss> nss_bands;

    std::string to_json() const;
};

/// Computes every metric the inputs allow: NSS/AUC/bands need fixations,
/// CC/KLD need a ground-truth map.
MetricReport evaluate(const Raster& pred, const Raster* gt, const FixationSet* fix,
                      double band_width = 0.0);

/// Rotates an ERP map by whole columns (positive shifts move content east).
Raster roll_columns(const Raster& map, std::ptrdiff_t shift);

}  // namespace odisphere
