#include "singlab/sections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace singlab {

CrossSection CrossSection::make(const Vec3& anchor, const Vec3& normal, const Vec3& e1, double half_u,
                                double half_v, int orientation) {
    if (!(normal.norm() > 0.0)) throw DomainError("CrossSection: zero normal");
    if (!(half_u > 0.0 && half_v > 0.0)) throw DomainError("CrossSection: half-extents must be > 0");
    if (orientation < -1 || orientation > 1) throw DomainError("CrossSection: orientation must be -1, 0 or +1");
    CrossSection s;
    s.anchor = anchor;
    s.normal = normal.normalized();
    Vec3 u = e1 - e1.dot(s.normal) * s.normal;
    if (!(u.norm() > 1e-12 * e1.norm())) throw DomainError("CrossSection: e1 parallel to the normal");
    s.e1 = u.normalized();
    s.e2 = s.normal.cross(s.e1);
    s.half_u = half_u;
    s.half_v = half_v;
    s.orientation = orientation;
    return s;
}

CrossingReport detect_crossings(const Trajectory& traj, const CrossSection& section, const CrossingOptions& opts) {
    CrossingReport report;
    if (traj.size() < 2) return report;
    auto rhs = [&](double, const Vec3& x) -> Vec3 { return eval_field(*opts.field, x); };
    double g0 = section.signed_distance(traj.states[0]);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const double g1 = section.signed_distance(traj.states[k + 1]);
        int orient = 0;
        if (g0 < 0.0 && g1 >= 0.0) orient = 1;
        else if (g0 > 0.0 && g1 <= 0.0) orient = -1;
        const double g_left = g0;
        g0 = g1;
        if (orient == 0 || (section.orientation != 0 && orient != section.orientation)) continue;

        double a = traj.times[k], b = traj.times[k + 1], ga = g_left;
        double t_hit = b;
        if (g1 != 0.0) {
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                const double gm = section.signed_distance(traj.interpolate(k, m));
                if (std::abs(gm) < opts.tol) {
                    a = b = m;
                    break;
                }
                if ((gm > 0.0) == (ga > 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            t_hit = 0.5 * (a + b);
        }

        Vec3 x_hit, v_hit;
        if (opts.field) {
            x_hit = single_step<3>(rhs, traj.times[k], traj.states[k], t_hit - traj.times[k], opts.cfg);
            for (int it = 0; it < 8; ++it) {
                const double g = section.signed_distance(x_hit);
                if (std::abs(g) < opts.tol) break;
                const double vn = section.normal.dot(eval_field(*opts.field, x_hit));
                if (vn == 0.0) break;
                const double dt = -g / vn;
                x_hit = single_step<3>(rhs, t_hit, x_hit, dt, opts.cfg);
                t_hit += dt;
            }
            v_hit = eval_field(*opts.field, x_hit);
        } else {
            x_hit = traj.interpolate(k, t_hit);
            v_hit = traj.interpolate_velocity(k, t_hit);
        }
        if (std::abs(section.normal.dot(v_hit)) <= opts.grazing_tol * v_hit.norm()) {
            ++report.grazing;
            continue;
        }
        const Vec2 c = section.coords(x_hit);
        if (!section.in_extent(c)) continue;
        report.hits.push_back({t_hit, x_hit, c, orient});
    }
    return report;
}

ReturnMapData return_map_from_trajectory(const Trajectory& traj, const CrossSection& section,
                                         const CrossingOptions& opts) {
    ReturnMapData data;
    if (traj.empty()) return data;
    std::vector<SectionHit> hits;
    const Vec3& x0 = traj.states.front();
    if (std::abs(section.signed_distance(x0)) <= opts.tol && section.in_extent(section.coords(x0))) {
        const double vn = section.normal.dot(traj.velocities_out.front());
        const int orient = vn > 0.0 ? 1 : (vn < 0.0 ? -1 : 0);
        if (orient != 0 && (section.orientation == 0 || orient == section.orientation))
            hits.push_back({traj.times.front(), x0, section.coords(x0), orient});
    }
    const CrossingReport found = detect_crossings(traj, section, opts);
    hits.insert(hits.end(), found.hits.begin(), found.hits.end());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        for (std::size_t j = i + 1; j < hits.size(); ++j) {
            if (hits[j].orientation != hits[i].orientation) continue;
            if (hits[j].time > hits[i].time)
                data.records.push_back({hits[i].coords, hits[j].coords, hits[j].time - hits[i].time, hits[i].state});
            break;
        }
    }
    if (found.grazing > 0)
        data.warnings.push_back(std::to_string(found.grazing) + " grazing crossings excluded");
    return data;
}

ReturnMapData build_return_map(const VectorField& field, const CrossSection& section,
                               const std::vector<Vec3>& seeds, double T, const IntegratorConfig& cfg) {
    ReturnMapData data;
    CrossingOptions opts;
    opts.field = &field;
    opts.cfg = cfg;
    for (const Vec3& seed : seeds) {
        const Trajectory traj = integrate(field, seed, T, cfg);
        ReturnMapData part = return_map_from_trajectory(traj, section, opts);
        data.records.insert(data.records.end(), part.records.begin(), part.records.end());
        data.warnings.insert(data.warnings.end(), part.warnings.begin(), part.warnings.end());
    }
    if (data.records.empty()) data.warnings.push_back("no returns within T");
    return data;
}

CrossSection geolorenz_section() {
    return CrossSection::make(Vec3(0, 0, 1), Vec3::UnitZ(), Vec3::UnitX(), 1.0, 1.0, -1);
}

ReturnMapData build_geolorenz_return_map(const geolorenz::GeoLorenzParams& p, const std::vector<Vec2>& seeds,
                                         const IntegratorConfig& cfg) {
    ReturnMapData data;
    const CrossSection section = geolorenz_section();
    for (const Vec2& seed : seeds) {
        const Trajectory traj = geolorenz::simulate_flow(p, seed, 1e-9, cfg);
        ReturnMapData part = return_map_from_trajectory(traj, section);
        if (!part.records.empty()) data.records.push_back(part.records.front());
        data.warnings.insert(data.warnings.end(), part.warnings.begin(), part.warnings.end());
    }
    if (data.records.empty()) data.warnings.push_back("no returns within T");
    return data;
}

// ---------------------------------------------------------------------------

DREstimate estimate_DR(const std::vector<Vec2>& entries, const std::vector<Vec2>& returns, std::size_t center,
                       std::size_t k) {
    if (entries.size() != returns.size()) throw DomainError("estimate_DR: size mismatch");
    if (center >= entries.size()) throw DomainError("estimate_DR: center out of range");
    if (k < 5 || entries.size() < k + 1) throw DomainError("estimate_DR: needs at least 5 neighbours");
    std::vector<std::size_t> idx(entries.size());
    std::iota(idx.begin(), idx.end(), 0);
    idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(center));
    const Vec2 c = entries[center];
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          return (entries[a] - c).squaredNorm() < (entries[b] - c).squaredNorm();
                      });
    Eigen::Matrix<double, Eigen::Dynamic, 2> a(k, 2), b(k, 2);
    for (std::size_t i = 0; i < k; ++i) {
        a.row(static_cast<Eigen::Index>(i)) = (entries[idx[i]] - c).transpose();
        b.row(static_cast<Eigen::Index>(i)) = (returns[idx[i]] - returns[center]).transpose();
    }
    const Mat2 ata = a.transpose() * a;
    Eigen::JacobiSVD<Mat2> svd(ata);
    const auto sv = svd.singularValues();
    if (!(sv(1) > 1e-12 * sv(0))) throw NumericError("estimate_DR: ill-conditioned neighbourhood");
    DREstimate out;
    out.dr = (ata.inverse() * (a.transpose() * b)).transpose();
    const auto res = b - a * out.dr.transpose();
    out.residual = std::sqrt(res.squaredNorm() / static_cast<double>(k));
    out.neighbors = k;
    return out;
}

// ---------------------------------------------------------------------------

SectionHyperbolicityReport check_section_hyperbolicity(const std::vector<SectionSample>& samples, double lambda,
                                                       double rho, std::size_t cone_vectors, double half_v) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("check_section_hyperbolicity: lambda must lie in (0, 1)");
    if (!(rho > 0.0)) throw DomainError("check_section_hyperbolicity: rho must be > 0");
    if (cone_vectors < 2) throw DomainError("check_section_hyperbolicity: need at least 2 cone vectors");
    SectionHyperbolicityReport rep;
    rep.lambda = lambda;
    rep.rho = rho;
    rep.samples = samples.size();
    rep.min_cu_expansion = std::numeric_limits<double>::infinity();
    rep.min_cone_stretch = std::numeric_limits<double>::infinity();
    rep.adaptedness_margin = std::numeric_limits<double>::infinity();
    const double stretch_bound = (5.0 / 6.0) / lambda;
    for (const SectionSample& s : samples) {
        bool ok = true;
        const double st = (s.dr * s.es).norm();
        const double cu = (s.dr * s.ecu).norm();
        rep.max_stable = std::max(rep.max_stable, st);
        rep.min_cu_expansion = std::min(rep.min_cu_expansion, cu);
        if (!(st < lambda)) {
            ++rep.stable_failures;
            ok = false;
        }
        if (!(cu > 1.0 / lambda)) {
            ++rep.unstable_failures;
            ok = false;
        }
        Mat2 basis;
        basis.col(0) = s.es_image;
        basis.col(1) = s.ecu_image;
        const Eigen::FullPivLU<Mat2> lu(basis);
        bool cone_ok = lu.isInvertible();
        for (std::size_t i = 0; i < cone_vectors && cone_ok; ++i) {
            const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(cone_vectors - 1);
            const Vec2 v = s.ecu + t * rho * s.es;
            const Vec2 w = s.dr * v;
            const Vec2 ab = lu.solve(w);
            const double ratio = std::abs(ab(0)) / std::abs(ab(1));
            const double stretch = w.norm() / v.norm();
            rep.max_cone_ratio = std::max(rep.max_cone_ratio, ratio);
            rep.min_cone_stretch = std::min(rep.min_cone_stretch, stretch);
            if (!(ratio <= rho / 2.0) || !(stretch >= stretch_bound)) cone_ok = false;
        }
        if (!cone_ok) {
            ++rep.cone_failures;
            ok = false;
        }
        rep.adaptedness_margin = std::min(rep.adaptedness_margin, half_v - std::abs(s.point.y()));
        rep.sample_pass.push_back(ok);
    }
    return rep;
}

std::vector<SectionSample> geolorenz_section_samples(const geolorenz::GeoLorenzParams& p, std::size_t n,
                                                     int iterate, std::uint64_t seed, std::size_t history) {
    if (iterate < 1) throw DomainError("geolorenz_section_samples: iterate must be >= 1");
    Rng rng(seed);
    std::size_t nudges = 0;
    Vec2 z(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    Vec2 v = Vec2::UnitX();
    auto advance = [&] {
        z.x() = geolorenz::nudge_off_singular(z.x(), nudges);
        v = (geolorenz::return_map_jacobian(p, z) * v).normalized();
        z = geolorenz::return_map(p, z);
    };
    for (std::size_t i = 0; i < history; ++i) advance();
    std::vector<SectionSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < history; ++j) advance();
        z.x() = geolorenz::nudge_off_singular(z.x(), nudges);
        SectionSample s;
        s.point = z;
        s.ecu = v;
        Mat2 dr = Mat2::Identity();
        Vec2 w = z;
        for (int k = 0; k < iterate; ++k) {
            w.x() = geolorenz::nudge_off_singular(w.x(), nudges);
            dr = geolorenz::return_map_jacobian(p, w) * dr;
            w = geolorenz::return_map(p, w);
        }
        s.dr = dr;
        s.es = Vec2::UnitY();
        s.es_image = Vec2::UnitY();
        s.ecu_image = (dr * v).normalized();
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------

SplittingEstimate check_singular_hyperbolicity(const std::vector<TangentFrame>& frames,
                                               const SingularHyperbolicityOptions& opts) {
    if (frames.size() < 3) throw DomainError("check_singular_hyperbolicity: too few frames");
    if (!(opts.window > 0.0)) throw DomainError("check_singular_hyperbolicity: window must be > 0");
    const double dt = frames[1].time - frames[0].time;
    // Drop a shorter trailing interval so every step has the same length.
    std::size_t m = frames.size() - 1;
    if (m >= 2 && std::abs((frames[m].time - frames[m - 1].time) - dt) > 1e-9 * dt) --m;
    const double total = frames[m].time - frames[0].time;
    if (total < 10.0 * opts.window) throw DomainError("check_singular_hyperbolicity: window too short for the orbit");
    const auto w = static_cast<std::size_t>(std::llround(opts.window / dt));
    const auto tr = static_cast<std::size_t>(std::ceil(opts.transient / dt));
    if (w < 2 || 2 * tr + w + 1 > m) throw DomainError("check_singular_hyperbolicity: window too short");

    // Backward iteration of the most contracted direction in Q coordinates.
    std::vector<Vec3> c(m + 1);
    std::vector<double> log_s(m + 1, 0.0);  // log growth of E^s over (j, j+1)
    c[m] = Vec3::UnitZ();
    for (std::size_t j = m; j >= 1; --j) {
        const Mat3& r = frames[j].r_factor;
        const Vec3 back = r.triangularView<Eigen::Upper>().solve(c[j]);
        const double n = back.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("check_singular_hyperbolicity: degenerate frames");
        c[j - 1] = back / n;
        log_s[j - 1] = -std::log(n);
    }

    SplittingEstimate est;
    const std::size_t first = tr, last = m - tr - w;
    est.lags.resize(w + 1);
    est.log_domination.assign(w + 1, 0.0);
    est.log_jc.assign(w + 1, 0.0);
    for (std::size_t l = 0; l <= w; ++l) est.lags[l] = static_cast<double>(l) * dt;
    std::vector<std::vector<double>> dom(last - first + 1), jc(last - first + 1);
    est.min_angle = 0.5 * 3.141592653589793;
    for (std::size_t j = first; j <= last; ++j) {
        const Mat3& q = frames[j].basis;
        est.times.push_back(frames[j].time);
        est.es.push_back((q * c[j]).normalized());
        est.ecu_normal.push_back(q.col(2));
        est.min_angle = std::min(est.min_angle, std::asin(std::min(1.0, std::abs(c[j](2)))));
        auto& d = dom[j - first];
        auto& v = jc[j - first];
        d.assign(w + 1, 0.0);
        v.assign(w + 1, 0.0);
        Mat2 prod = Mat2::Identity();
        double log_scale = 0.0, ls = 0.0, lj = 0.0;
        for (std::size_t l = 1; l <= w; ++l) {
            const Mat3& r = frames[j + l].r_factor;
            ls += log_s[j + l - 1];
            lj += std::log(r(0, 0)) + std::log(r(1, 1));
            prod = r.topLeftCorner<2, 2>() * prod;
            const double scale = prod.cwiseAbs().maxCoeff();
            prod /= scale;
            log_scale += std::log(scale);
            const double log_smax = log_scale + std::log(Eigen::JacobiSVD<Mat2>(prod).singularValues()(0));
            const double log_m = lj - log_smax;
            d[l] = ls - log_m;
            v[l] = lj;
        }
        for (std::size_t l = 0; l <= w; ++l) {
            est.log_domination[l] += d[l];
            est.log_jc[l] += v[l];
        }
    }
    const double count = static_cast<double>(last - first + 1);
    for (std::size_t l = 0; l <= w; ++l) {
        est.log_domination[l] /= count;
        est.log_jc[l] /= count;
    }
    est.domination_fit = fit_line(est.lags, est.log_domination);
    est.volume_fit = fit_line(est.lags, est.log_jc);
    est.domination_rate = -est.domination_fit.slope;
    est.volume_rate = est.volume_fit.slope;
    double max_dom = -std::numeric_limits<double>::infinity();
    double min_vol = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < dom.size(); ++s) {
        for (std::size_t l = 0; l <= w; ++l) {
            max_dom = std::max(max_dom, dom[s][l] + est.domination_rate * est.lags[l]);
            min_vol = std::min(min_vol, jc[s][l] - est.volume_rate * est.lags[l]);
        }
    }
    est.domination_K = std::exp(-max_dom);
    est.volume_K = std::exp(min_vol);
    const bool dom_ok = est.domination_rate > 0.0 && est.domination_fit.r_squared >= opts.min_r_squared;
    const bool vol_ok = est.volume_rate > 0.0 && est.volume_fit.r_squared >= opts.min_r_squared;
    est.pass = dom_ok && vol_ok;
    if (!dom_ok) est.reason = "no domination";
    else if (!vol_ok) est.reason = "no volume expansion";
    return est;
}

// ---------------------------------------------------------------------------

LorenzLikeVerdict check_lorenz_like(const std::array<double, 3>& eigenvalues) {
    std::array<double, 3> s = eigenvalues;
    std::sort(s.begin(), s.end(), std::greater<>());
    LorenzLikeVerdict v;
    v.applicable = true;
    v.lambda = {s[0], s[2], s[1]};
    const double l1 = s[0], l3 = s[1], l2 = s[2];
    v.pass = l2 < l3 && l3 < 0.0 && 0.0 < -l3 && -l3 < l1;
    return v;
}

LorenzLikeVerdict check_lorenz_like(const std::array<std::complex<double>, 3>& eigenvalues) {
    std::array<double, 3> re{};
    for (int i = 0; i < 3; ++i) {
        if (eigenvalues[i].imag() != 0.0) return {};
        re[i] = eigenvalues[i].real();
    }
    return check_lorenz_like(re);
}

std::array<std::complex<double>, 3> linearization_eigenvalues(const VectorField& field, const Vec3& point) {
    Eigen::EigenSolver<Mat3> solver(jacobian(field, point), false);
    if (solver.info() != Eigen::Success) throw NumericError("linearization_eigenvalues: eigensolver failed");
    const auto ev = solver.eigenvalues();
    return {ev(0), ev(1), ev(2)};
}

}  // namespace singlab
