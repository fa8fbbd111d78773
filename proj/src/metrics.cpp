#include "hsdiff/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hsdiff {

namespace {

void require_same_shape(const HSICube& a, const HSICube& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": cube shapes differ");
}

// deterministic parallel sum: per-band partials combined serially
template <typename F>
double banded_sum(const HSICube& a, F&& term) {
    const std::size_t plane = static_cast<std::size_t>(a.rows) * a.cols;
    std::vector<double> partial(a.bands(), 0.0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < a.bands(); ++b) {
        double s = 0.0;
        const std::size_t off = static_cast<std::size_t>(b) * plane;
        for (std::size_t p = 0; p < plane; ++p) s += term(off + p);
        partial[b] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

} // namespace

UncertaintyCube posterior_stats(const std::vector<HSICube>& members) {
    if (members.empty())
        throw DataError("posterior_stats: empty ensemble");
    const HSICube& first = members.front();
    for (const auto& m : members) require_same_shape(first, m, "posterior_stats");

    UncertaintyCube u;
    u.member_count = static_cast<int>(members.size());
    u.mean = HSICube(first.rows, first.cols, first.grid, first.domain);
    u.var = u.mean;
    const std::size_t n = u.mean.data.size();
    const double inv_k = 1.0 / members.size();
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(n); ++p) {
        double acc = 0.0;
        for (const auto& m : members) acc += m.data[p];
        const double mu = acc * inv_k;
        double v = 0.0;
        for (const auto& m : members) {
            const double d = m.data[p] - mu;
            v += d * d;
        }
        u.mean.data[p] = mu;
        u.var.data[p] = v * inv_k;  // population variance
    }
    u.std = u.var;
    for (double& v : u.std.data) v = std::sqrt(v);
    return u;
}

UncertaintyCube posterior_stats(const PosteriorEnsemble& ens) {
    return posterior_stats(ens.members);
}

double psnr(const HSICube& reference, const HSICube& estimate) {
    require_same_shape(reference, estimate, "psnr");
    if (reference.domain != Domain::Reflectance || estimate.domain != Domain::Reflectance)
        throw DomainError("psnr: metrics are defined on reflectance-domain cubes");
    const double mse = banded_sum(reference, [&](std::size_t i) {
        const double d = reference.data[i] - estimate.data[i];
        return d * d;
    }) / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

SamResult sam(const HSICube& reference, const HSICube& estimate) {
    require_same_shape(reference, estimate, "sam");
    const int k = reference.bands();
    const std::size_t npix = static_cast<std::size_t>(reference.rows) * reference.cols;
    std::vector<double> angle(npix, 0.0);
    std::vector<char> ok(npix, 0);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(npix); ++p) {
        double rr = 0.0, ee = 0.0, re = 0.0;
        for (int b = 0; b < k; ++b) {
            const double r = reference.data[static_cast<std::size_t>(b) * npix + p];
            const double e = estimate.data[static_cast<std::size_t>(b) * npix + p];
            rr += r * r;
            ee += e * e;
            re += r * e;
        }
        if (rr == 0.0 || ee == 0.0) continue;
        double c = re / (std::sqrt(rr) * std::sqrt(ee));
        c = std::clamp(c, -1.0, 1.0);
        angle[p] = std::acos(c);
        ok[p] = 1;
    }
    SamResult res;
    double total = 0.0;
    long count = 0;
    for (std::size_t p = 0; p < npix; ++p) {
        if (ok[p]) {
            total += angle[p];
            ++count;
        } else {
            ++res.skipped;
        }
    }
    if (count == 0)
        throw MetricError("sam: every pixel has a zero-norm spectrum");
    res.degrees = total / count * 180.0 / 3.14159265358979323846;
    return res;
}

double picp(const HSICube& reference, const UncertaintyCube& u, double k) {
    require_same_shape(reference, u.mean, "picp");
    if (!(k > 0.0))
        throw ConfigError("picp: k must be positive");
    const double covered = banded_sum(reference, [&](std::size_t i) {
        return std::abs(reference.data[i] - u.mean.data[i]) <= k * u.std.data[i] ? 1.0 : 0.0;
    });
    return covered / static_cast<double>(reference.size());
}

double picp_per_pixel(const HSICube& reference, const UncertaintyCube& u, double k) {
    const Image map = bcm(reference, u, k);
    double ok = 0.0;
    for (double v : map.data) ok += (v == 0.0) ? 1.0 : 0.0;
    return ok / static_cast<double>(map.size());
}

Image bcm(const HSICube& reference, const UncertaintyCube& u, double k) {
    require_same_shape(reference, u.mean, "bcm");
    const int bands = reference.bands();
    const std::size_t npix = static_cast<std::size_t>(reference.rows) * reference.cols;
    Image map(reference.rows, reference.cols, 1);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(npix); ++p) {
        double flag = 0.0;
        for (int b = 0; b < bands; ++b) {
            const std::size_t i = static_cast<std::size_t>(b) * npix + p;
            if (std::abs(reference.data[i] - u.mean.data[i]) > k * u.std.data[i]) {
                flag = 1.0;
                break;
            }
        }
        map.data[p] = flag;
    }
    return map;
}

double bcm_violation_rate(const Image& map) {
    double s = 0.0;
    for (double v : map.data) s += v;
    return s / static_cast<double>(map.size());
}

double pearson_calibration(const std::vector<CalibrationRecord>& records) {
    if (records.size() < 3)
        throw DataError("pearson_calibration: need at least 3 records, got " +
                        std::to_string(records.size()));
    const double n = static_cast<double>(records.size());
    double mx = 0.0, my = 0.0;
    for (const auto& r : records) {
        mx += r.mae;
        my += r.mean_std;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& r : records) {
        const double dx = r.mae - mx;
        const double dy = r.mean_std - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw MetricError("pearson_calibration: zero variance in a coordinate");
    return sxy / std::sqrt(sxx * syy);
}

double gaussian_nll(const HSICube& reference, const HSICube& mean, const HSICube& variance) {
    require_same_shape(reference, mean, "gaussian_nll");
    require_same_shape(reference, variance, "gaussian_nll");
    const double floor = 1e-12;
    const double total = banded_sum(reference, [&](std::size_t i) {
        const double v = std::max(variance.data[i], floor);
        const double d = reference.data[i] - mean.data[i];
        return d * d / v + std::log(v);
    });
    return 0.5 * total / static_cast<double>(reference.size());
}

double mean_abs_error(const HSICube& reference, const HSICube& estimate) {
    require_same_shape(reference, estimate, "mean_abs_error");
    return banded_sum(reference, [&](std::size_t i) {
               return std::abs(reference.data[i] - estimate.data[i]);
           }) /
           static_cast<double>(reference.size());
}

double mean_of(const HSICube& cube) {
    return banded_sum(cube, [&](std::size_t i) { return cube.data[i]; }) /
           static_cast<double>(cube.size());
}

} // namespace hsdiff
