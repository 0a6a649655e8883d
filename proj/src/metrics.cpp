#include "odisphere/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "odisphere/error.hpp"

namespace odisphere {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& field, std::size_t line)
{
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw IoError("fixations line " + std::to_string(line) + ": bad number '" + field + "'");
    return v;
}

struct WeightedMoments {
    double mean;
    double stddev;
};

WeightedMoments moments(const Raster& map, const Raster& w)
{
    const auto v = map.values();
    const auto wv = w.values();
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += wv[i] * v[i];
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) var += wv[i] * (v[i] - mean) * (v[i] - mean);
    return {mean, std::sqrt(var)};
}

void require_single_channel(const Raster& map, const char* what)
{
    if (map.channels() != 1 || map.rows() < 2 || map.cols() < 2)
        throw DimensionError(std::string(what) + ": expects a single-channel ERP map of at least 2x2");
}

void require_non_constant(const Raster& map, const char* what)
{
    const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
    if (*lo == *hi) throw DegenerateInputError(std::string(what) + ": map is constant");
}

std::size_t fixation_pixel(ErpSize size, const Fixation& f)
{
    const ErpCoord px = sphere_to_erp(size, {f.azimuth, f.elevation});
    const auto r = static_cast<std::ptrdiff_t>(std::floor(px.row + 0.5));
    auto c = static_cast<std::ptrdiff_t>(std::floor(px.col + 0.5));
    const auto rows = static_cast<std::ptrdiff_t>(size.rows);
    const auto cols = static_cast<std::ptrdiff_t>(size.cols);
    c = ((c % cols) + cols) % cols;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, rows - 1) * cols + c);
}

}  // namespace

FixationSet parse_fixations_csv(const std::string& text)
{
    FixationSet set;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ls(t);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(trim(f));
        if (fields.size() < 2 || fields.size() > 3)
            throw IoError("fixations line " + std::to_string(line_no) + ": expected 2 or 3 fields");
        const double az = parse_number(fields[0], line_no);
        const double el = parse_number(fields[1], line_no);
        const double w = fields.size() == 3 ? parse_number(fields[2], line_no) : 1.0;
        if (az < -180.0 || az >= 180.0 || el < -90.0 || el > 90.0)
            throw IoError("fixations line " + std::to_string(line_no) + ": angle out of range");
        if (w < 0.0) throw IoError("fixations line " + std::to_string(line_no) + ": negative weight");
        set.points.push_back({deg_to_rad(az), deg_to_rad(el), w});
    }
    return set;
}

FixationSet load_fixations_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_fixations_csv(ss.str());
}

namespace {

// Weighted mean z-score over `subset` (every fixation when null).
double nss_over(const Raster& map, const FixationSet& fix, const WeightedMoments& m,
                const std::vector<std::size_t>* subset)
{
    const ErpSize size = map.shape2d();
    double acc = 0.0;
    double total = 0.0;
    auto visit = [&](const Fixation& f) {
        const double s = sample_erp_bilinear(map, 0, sphere_to_erp(size, {f.azimuth, f.elevation}));
        acc += f.weight * (s - m.mean) / m.stddev;
        total += f.weight;
    };
    if (subset != nullptr) {
        for (std::size_t i : *subset) visit(fix.points[i]);
    } else {
        for (const Fixation& f : fix.points) visit(f);
    }
    if (!(total > 0.0)) throw DegenerateInputError("nss: fixation weights sum to zero");
    return acc / total;
}

}  // namespace

double nss(const Raster& map, const FixationSet& fix)
{
    require_single_channel(map, "nss");
    if (fix.empty()) throw DegenerateInputError("nss: no fixations");
    require_non_constant(map, "nss");
    const WeightedMoments m = moments(map, solid_angle_weights(map.shape2d()));
    return nss_over(map, fix, m, nullptr);
}

double auc_judd(const Raster& map, const FixationSet& fix)
{
    require_single_channel(map, "auc");
    if (fix.empty()) throw DegenerateInputError("auc: no fixations");
    const ErpSize size = map.shape2d();
    const Raster w = solid_angle_weights(size);
    const auto s = map.values();
    const auto wv = w.values();

    std::vector<char> fixated(s.size(), 0);
    std::vector<std::pair<double, double>> fix_values;  // (saliency, weight)
    double fix_total = 0.0;
    for (const Fixation& f : fix.points) {
        const std::size_t p = fixation_pixel(size, f);
        fixated[p] = 1;
        fix_values.emplace_back(s[p], f.weight);
        fix_total += f.weight;
    }
    if (!(fix_total > 0.0)) throw DegenerateInputError("auc: fixation weights sum to zero");

    std::vector<std::pair<double, double>> background;  // (saliency, area)
    double area_total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (fixated[i]) continue;
        background.emplace_back(s[i], wv[i]);
        area_total += wv[i];
    }
    if (!(area_total > 0.0)) throw DegenerateInputError("auc: every pixel is fixated");

    auto by_value_desc = [](const auto& a, const auto& b) { return a.first > b.first; };
    std::sort(fix_values.begin(), fix_values.end(), by_value_desc);
    std::sort(background.begin(), background.end(), by_value_desc);

    double prev_tp = 0.0;
    double prev_fp = 0.0;
    double area = 0.0;
    double tp_acc = 0.0;
    double fp_acc = 0.0;
    std::size_t fi = 0;
    std::size_t bi = 0;
    while (fi < fix_values.size()) {
        const double thresh = fix_values[fi].first;
        while (fi < fix_values.size() && fix_values[fi].first == thresh) tp_acc += fix_values[fi++].second;
        while (bi < background.size() && background[bi].first >= thresh) fp_acc += background[bi++].second;
        const double tp = tp_acc / fix_total;
        const double fp = fp_acc / area_total;
        area += 0.5 * (fp - prev_fp) * (tp + prev_tp);
        prev_tp = tp;
        prev_fp = fp;
    }
    area += 0.5 * (1.0 - prev_fp) * (1.0 + prev_tp);
    return area;
}

double cc(const Raster& a, const Raster& b)
{
    require_single_channel(a, "cc");
    if (!a.same_shape(b)) throw DimensionError("cc: maps differ in shape");
    require_non_constant(a, "cc");
    require_non_constant(b, "cc");
    const Raster w = solid_angle_weights(a.shape2d());
    const WeightedMoments ma = moments(a, w);
    const WeightedMoments mb = moments(b, w);
    const auto av = a.values();
    const auto bv = b.values();
    const auto wv = w.values();
    double cov = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) cov += wv[i] * (av[i] - ma.mean) * (bv[i] - mb.mean);
    return std::clamp(cov / (ma.stddev * mb.stddev), -1.0, 1.0);
}

double kld_metric(const Raster& pred, const Raster& gt, KldDirection dir, double eps)
{
    require_single_channel(pred, "kld");
    if (!pred.same_shape(gt)) throw DimensionError("kld: maps differ in shape");
    if (!all_non_negative(pred.values()) || !all_non_negative(gt.values()))
        throw std::invalid_argument("kld: maps must be non-negative");
    const Raster w = solid_angle_weights(pred.shape2d());
    const auto wv = w.values();
    const auto pv = pred.values();
    const auto gv = gt.values();
    double sp = 0.0;
    double sg = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) {
        sp += wv[i] * pv[i];
        sg += wv[i] * gv[i];
    }
    if (!(sp > 0.0)) throw DegenerateInputError("kld: prediction has no mass");
    if (!(sg > 0.0)) throw DegenerateInputError("kld: ground truth has no mass");
    double kl = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) {
        const double p = wv[i] * pv[i] / sp;
        const double q = wv[i] * gv[i] / sg;
        const double ref = dir == KldDirection::gt_to_pred ? q : p;
        const double other = dir == KldDirection::gt_to_pred ? p : q;
        if (ref > 0.0) kl += ref * std::log((ref + eps) / (other + eps));
    }
    return kl;
}

std::vector<BandNss> nss_by_elevation(const Raster& map, const FixationSet& fix, double band_width)
{
    require_single_channel(map, "nss_by_elevation");
    if (!(band_width > 0.0)) throw std::invalid_argument("nss_by_elevation: band width must be positive");
    require_non_constant(map, "nss_by_elevation");
    const WeightedMoments m = moments(map, solid_angle_weights(map.shape2d()));

    const auto bands = static_cast<std::size_t>(std::ceil(kPi / band_width - 1e-9));
    std::vector<std::vector<std::size_t>> members(bands);
    for (std::size_t i = 0; i < fix.points.size(); ++i) {
        const double offset = fix.points[i].elevation + kPi / 2;
        auto b = static_cast<std::size_t>(std::max(0.0, std::floor(offset / band_width)));
        members[std::min(b, bands - 1)].push_back(i);
    }
    std::vector<BandNss> out;
    for (std::size_t b = 0; b < bands; ++b) {
        if (members[b].empty()) continue;
        const double lo = -kPi / 2 + static_cast<double>(b) * band_width;
        const double hi = std::min(kPi / 2, lo + band_width);
        out.push_back({0.5 * (lo + hi), nss_over(map, fix, m, &members[b])});
    }
    return out;
}

std::string MetricReport::to_json() const
{
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    j["nss"] = opt(nss);
    j["auc"] = opt(auc);
    j["cc"] = opt(cc);
    j["kld"] = opt(kld);
    auto bands = nlohmann::ordered_json::array();
    for (const BandNss& b : nss_bands) bands.push_back({{"elevation_deg", rad_to_deg(b.center)}, {"nss", b.nss}});
    j["nss_by_elevation"] = bands;
    j["metadata"] = {{"weighting", "solid-angle (cos latitude)"},
                     {"nss_zscore", "solid-angle-weighted"},
                     {"auc_variant", "judd"},
                     {"kld_direction", "gt||pred"}};
    return j.dump(2) + "\n";
}

MetricReport evaluate(const Raster& pred, const Raster* gt, const FixationSet* fix, double band_width)
{
    MetricReport r;
    if (fix != nullptr && !fix->empty()) {
        r.nss = nss(pred, *fix);
        r.auc = auc_judd(pred, *fix);
        if (band_width > 0.0) r.nss_bands = nss_by_elevation(pred, *fix, band_width);
    }
    if (gt != nullptr) {
        r.cc = cc(pred, *gt);
        r.kld = kld_metric(pred, *gt);
    }
    return r;
}

Raster roll_columns(const Raster& map, std::ptrdiff_t shift)
{
    Raster out(map.rows(), map.cols(), map.channels());
    const auto cols = static_cast<std::ptrdiff_t>(map.cols());
    for (std::size_t ch = 0; ch < map.channels(); ++ch)
        for (std::size_t r = 0; r < map.rows(); ++r)
            for (std::ptrdiff_t c = 0; c < cols; ++c)
                out(r, static_cast<std::size_t>(((c + shift) % cols + cols) % cols), ch) =
                    map(r, static_cast<std::size_t>(c), ch);
    return out;
}

}  // namespace odisphere
