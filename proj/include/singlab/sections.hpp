#pragma once

// Cross-sections of numerically integrated flows, empirical return maps, and
// finite-sample certificates for the hyperbolicity inequalities (section
// hyperbolicity of return maps, domination and volume expansion along flow
// orbits, Lorenz-like equilibria).

#include <array>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "singlab/fit.hpp"
#include "singlab/flowcore.hpp"
#include "singlab/geolorenz.hpp"
#include "singlab/types.hpp"

namespace singlab {

// Planar rectangle through `anchor` with unit `normal` and in-plane
// orthonormal axes e1, e2 (e2 = normal x e1).
struct CrossSection {
    Vec3 anchor = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 e1 = Vec3::UnitX();
    Vec3 e2 = Vec3::UnitY();
    double half_u = std::numeric_limits<double>::infinity();
    double half_v = std::numeric_limits<double>::infinity();
    // +1 keeps crossings along +normal, -1 along -normal, 0 both.
    int orientation = 0;

    // Normalises normal, orthogonalises e1 against it; throws DomainError on
    // degenerate input.
    static CrossSection make(const Vec3& anchor, const Vec3& normal, const Vec3& e1, double half_u,
                             double half_v, int orientation);

    double signed_distance(const Vec3& x) const { return normal.dot(x - anchor); }
    Vec2 coords(const Vec3& x) const { return {e1.dot(x - anchor), e2.dot(x - anchor)}; }
    bool in_extent(const Vec2& c) const { return std::abs(c.x()) <= half_u && std::abs(c.y()) <= half_v; }
};

struct SectionHit {
    double time = 0.0;
    Vec3 state = Vec3::Zero();
    Vec2 coords = Vec2::Zero();
    int orientation = 0;
};

struct CrossingOptions {
    // Target |signed distance| of a refined hit, relative to the section scale 1.
    double tol = 1e-10;
    // Crossings with |normal . v| <= grazing_tol * |v| are treated as tangential.
    double grazing_tol = 1e-6;
    // When set, the refined hit state is recomputed with explicit steps of this
    // field from the preceding node instead of taken from the interpolant.
    const VectorField* field = nullptr;
    IntegratorConfig cfg{};
};

struct CrossingReport {
    std::vector<SectionHit> hits;
    std::size_t grazing = 0;
};

CrossingReport detect_crossings(const Trajectory& traj, const CrossSection& section,
                                const CrossingOptions& opts = {});

// -- return maps -------------------------------------------------------------

struct ReturnRecord {
    Vec2 entry = Vec2::Zero();
    Vec2 ret = Vec2::Zero();
    double return_time = 0.0;
    Vec3 entry_state = Vec3::Zero();
};

struct ReturnMapData {
    std::vector<ReturnRecord> records;
    std::vector<std::string> warnings;
};

// Pairs consecutive hits of one trajectory. If the trajectory starts on the
// section (within opts.tol) the starting point counts as the first entry.
ReturnMapData return_map_from_trajectory(const Trajectory& traj, const CrossSection& section,
                                         const CrossingOptions& opts = {});

ReturnMapData build_return_map(const VectorField& field, const CrossSection& section,
                               const std::vector<Vec3>& seeds, double T, const IntegratorConfig& cfg);

// The section S = {z = 1, |x|, |y| <= 1} of the geometric Lorenz flow,
// crossed downward.
CrossSection geolorenz_section();

// One first return per seed from a direct simulation of the geometric Lorenz
// flow (numerical linear part, closed-form reinjection).
ReturnMapData build_geolorenz_return_map(const geolorenz::GeoLorenzParams& p, const std::vector<Vec2>& seeds,
                                         const IntegratorConfig& cfg);

// -- derivative estimates ----------------------------------------------------

struct DREstimate {
    Mat2 dr = Mat2::Zero();
    double residual = 0.0;
    std::size_t neighbors = 0;
};

// Least-squares fit of ret_j - ret_c = DR (entry_j - entry_c) over the k
// nearest entries to entries[center]. Needs k >= 5; throws NumericError when
// the neighbourhood does not span both directions.
DREstimate estimate_DR(const std::vector<Vec2>& entries, const std::vector<Vec2>& returns, std::size_t center,
                       std::size_t k = 8);

// Same estimator on 8 points on a circle of radius h around `point`.
template <typename Map>
DREstimate estimate_DR_local(Map&& map, const Vec2& point, double h) {
    std::vector<Vec2> entries{point}, returns{map(point)};
    for (int i = 0; i < 8; ++i) {
        const double a = 0.7853981633974483 * i;
        const Vec2 q = point + h * Vec2(std::cos(a), std::sin(a));
        entries.push_back(q);
        returns.push_back(map(q));
    }
    return estimate_DR(entries, returns, 0, 8);
}

// -- hyperbolicity of a return map -------------------------------------------

// Derivative of a return map at one point together with the splitting
// E^s + E^cu at the point and at its image (unit vectors).
struct SectionSample {
    Vec2 point = Vec2::Zero();
    Mat2 dr = Mat2::Identity();
    Vec2 es = Vec2::UnitY();
    Vec2 ecu = Vec2::UnitX();
    Vec2 es_image = Vec2::UnitY();
    Vec2 ecu_image = Vec2::UnitX();
};

struct SectionHyperbolicityReport {
    double lambda = 0.0;
    double rho = 0.0;
    std::size_t samples = 0;
    double max_stable = 0.0;          // max |DR e^s|
    double min_cu_expansion = 0.0;    // min |DR e^cu|
    double min_cone_stretch = 0.0;    // min |DR v| / |v| over cone vectors
    double max_cone_ratio = 0.0;      // max |stable part| / |cu part| of DR v, to compare with rho/2
    double adaptedness_margin = 0.0;  // min over samples of half_v - |v|
    std::size_t stable_failures = 0;
    std::size_t unstable_failures = 0;
    std::size_t cone_failures = 0;
    std::vector<bool> sample_pass;

    bool stable_pass() const { return stable_failures == 0; }
    bool unstable_pass() const { return unstable_failures == 0; }
    bool cone_pass() const { return cone_failures == 0; }
    bool pass() const { return samples > 0 && stable_pass() && unstable_pass() && cone_pass(); }
};

// Checks |DR e^s| < lambda, |DR e^cu| > 1/lambda, DR(C_rho) inside C_{rho/2} at
// the image, and |DR v| >= (5/6) |v| / lambda on the cone C_rho, using
// `cone_vectors` vectors e^cu + t rho e^s, t in [-1, 1].
SectionHyperbolicityReport check_section_hyperbolicity(const std::vector<SectionSample>& samples, double lambda,
                                                       double rho, std::size_t cone_vectors = 17,
                                                       double half_v = 1.0);

// Samples of the k-fold iterated return map of the geometric Lorenz model at
// points of the attractor: E^s vertical, E^cu pushed forward from a horizontal
// vector along `history` previous returns.
std::vector<SectionSample> geolorenz_section_samples(const geolorenz::GeoLorenzParams& p, std::size_t n,
                                                     int iterate, std::uint64_t seed, std::size_t history = 30);

// -- singular hyperbolicity along a flow orbit -------------------------------

struct SingularHyperbolicityOptions {
    // Length of the domination / volume-expansion curves.
    double window = 20.0;
    // Frames discarded at both ends so E^cu (forward) and E^s (backward) converge.
    double transient = 10.0;
    double min_r_squared = 0.9;
};

struct SplittingEstimate {
    std::vector<double> times;  // frame times where the splitting was estimated
    std::vector<Vec3> es;
    std::vector<Vec3> ecu_normal;
    // Sample-averaged curves over t in [0, window].
    std::vector<double> lags;
    std::vector<double> log_domination;  // log |DX^t|E^s| - log m(DX^t|E^cu)
    std::vector<double> log_jc;          // log |det DX^t|E^cu|
    ScalingFit domination_fit;
    ScalingFit volume_fit;
    double domination_rate = 0.0;  // lambda in |DX|E^s| <= e^{-lambda t} m(DX|E^cu) / K
    double domination_K = 0.0;
    double volume_rate = 0.0;      // lambda in J^c_t >= K e^{lambda t}
    double volume_K = 0.0;
    double min_angle = 0.0;        // smallest angle between E^s and E^cu
    bool pass = false;
    std::string reason;
};

// Frames from integrate_with_tangent started with a generic (not coordinate
// aligned) orthonormal basis. m(.) is the smallest singular value.
SplittingEstimate check_singular_hyperbolicity(const std::vector<TangentFrame>& frames,
                                               const SingularHyperbolicityOptions& opts = {});

// -- Lorenz-like equilibria --------------------------------------------------

struct LorenzLikeVerdict {
    bool applicable = false;  // false for complex eigenvalues
    bool pass = false;
    // Sorted as (lambda1, lambda2, lambda3) with lambda1 > lambda3 > lambda2.
    std::array<double, 3> lambda{};
};

LorenzLikeVerdict check_lorenz_like(const std::array<double, 3>& eigenvalues);
LorenzLikeVerdict check_lorenz_like(const std::array<std::complex<double>, 3>& eigenvalues);

// Eigenvalues of DX at `point`.
std::array<std::complex<double>, 3> linearization_eigenvalues(const VectorField& field, const Vec3& point);

}  // namespace singlab
