#include "geomflow/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace geomflow {

namespace {

constexpr double pi = std::numbers::pi;

double profile(Profile p, double u)
{
    switch (p) {
    case Profile::uniform: return u;
    case Profile::graded_left: return u * u;
    case Profile::graded_ends: return 0.5 * (1.0 - std::cos(pi * u));
    }
    return u;
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidShape(what);
}

std::vector<double> radial_noise(int n, double amplitude, std::uint64_t seed)
{
    std::vector<double> out(static_cast<std::size_t>(n), 1.0);
    if (amplitude == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& f : out) f = 1.0 + amplitude * dist(rng);
    return out;
}

Mesh closed_curve(const ShapeSpec& s, bool noisy)
{
    const int n = s.nodes;
    require(n >= 3, "closed curves need at least 3 nodes");
    const auto factor = radial_noise(n, noisy ? s.noise : 0.0, s.seed);
    std::vector<Vec3> verts;
    std::vector<Element> elems;
    for (int i = 0; i < n; ++i) {
        // Clockwise traversal puts the element normal on the outside.
        const double theta = -2.0 * pi * profile(s.profile, static_cast<double>(i) / n);
        const double r = s.radius * factor[static_cast<std::size_t>(i)];
        verts.emplace_back(r * std::cos(theta), r * std::sin(theta), 0.0);
        elems.push_back({i, (i + 1) % n, -1});
    }
    return build_mesh(2, std::move(verts), std::move(elems), BoundaryKind::closed);
}

Mesh half_circle(const ShapeSpec& s)
{
    const int n = s.nodes;
    require(n >= 2, "half circle needs at least 2 elements");
    std::vector<Vec3> verts;
    std::vector<Element> elems;
    for (int i = 0; i <= n; ++i) {
        const double theta = pi * (1.0 - profile(s.profile, static_cast<double>(i) / n));
        Vec3 p(s.radius * std::cos(theta), s.radius * std::sin(theta), 0.0);
        if (i == 0) p = Vec3(-s.radius, 0.0, 0.0);
        if (i == n) p = Vec3(s.radius, 0.0, 0.0);
        verts.push_back(p);
        if (i < n) elems.push_back({i, i + 1, -1});
    }
    return build_mesh(2, std::move(verts), std::move(elems), BoundaryKind::open_substrate);
}

Mesh grim_reaper(const ShapeSpec& s)
{
    const int n = s.nodes;
    const double a = s.half_width;
    require(n >= 2, "grim reaper needs at least 2 elements");
    require(a > 0.0 && a < pi / 2, "grim reaper half width must lie in (0, pi/2)");
    std::vector<Vec3> verts;
    std::vector<Element> elems;
    for (int i = 0; i <= n; ++i) {
        double x = -a + 2.0 * a * static_cast<double>(i) / n;
        if (i == n) x = a;
        verts.emplace_back(x, -std::log(std::cos(x)) + 2.0, 0.0);
        if (i < n) elems.push_back({i, i + 1, -1});
    }
    return build_mesh(2, std::move(verts), std::move(elems), BoundaryKind::open_vertical_lines, {-a, a});
}

// Refined octahedron on the unit sphere; `upper_only` keeps the four faces with z >= 0.
void octahedron_sphere(int level, bool upper_only, std::vector<Vec3>& verts, std::vector<Element>& faces)
{
    verts = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1)};
    faces = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}};
    if (!upper_only) {
        verts.emplace_back(0, 0, -1);
        const std::vector<Element> lower = {{2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
        faces.insert(faces.end(), lower.begin(), lower.end());
    }
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec3 p = 0.5 * (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]);
            p.normalize();
            verts.push_back(p);
            const int id = static_cast<int>(verts.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<Element> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = midpoint(f[0], f[1]);
            const int bc = midpoint(f[1], f[2]);
            const int ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({ab, f[1], bc});
            next.push_back({ca, bc, f[2]});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
}

Mesh sphere(const ShapeSpec& s, bool upper_only)
{
    require(s.level >= 0, "refinement level must be nonnegative");
    std::vector<Vec3> verts;
    std::vector<Element> faces;
    octahedron_sphere(s.level, upper_only, verts, faces);
    const auto factor = radial_noise(static_cast<int>(verts.size()), s.noise, s.seed);
    for (std::size_t j = 0; j < verts.size(); ++j) verts[j] *= s.radius * factor[j];
    return build_mesh(
        3, std::move(verts), std::move(faces), upper_only ? BoundaryKind::open_substrate : BoundaryKind::closed);
}

Mesh dumbbell(const ShapeSpec& s)
{
    require(s.level >= 0, "refinement level must be nonnegative");
    std::vector<Vec3> verts;
    std::vector<Element> faces;
    octahedron_sphere(s.level, false, verts, faces);
    for (auto& p : verts) {
        const double w = 0.6 * p.z() * p.z() + 0.4;
        p.x() *= w;
        p.y() *= w;
    }
    return build_mesh(3, std::move(verts), std::move(faces), BoundaryKind::closed);
}

Vec3 torus_point(double theta, double phi)
{
    const double ring = 1.0 + 0.65 * std::cos(phi);
    return Vec3(ring * std::cos(theta), ring * std::sin(theta), 0.65 * std::sin(phi) + 0.3 * std::sin(5.0 * theta));
}

// Rings of constant phi, each carrying nodes equally spaced in arc length with
// counts proportional to the ring length; neighbouring rings are zipped by the
// normalized arc-length parameter. A ring with n_i nodes contributes n_i
// triangles to each of its two bands, so F = 2V.
Mesh torus(const ShapeSpec& s)
{
    const int F = s.triangles == 0 ? 1500 : s.triangles;
    require(F >= 60 && F % 2 == 0, "torus triangle count must be even and at least 60");
    const int V = F / 2;
    constexpr int samples = 4096;

    // Cumulative arc length along theta for a ring at angle phi.
    auto arc = [&](double phi) {
        std::vector<double> cum(samples + 1, 0.0);
        for (int k = 0; k < samples; ++k) {
            const Vec3 a = torus_point(2.0 * pi * k / samples, phi);
            const Vec3 b = torus_point(2.0 * pi * (k + 1) / samples, phi);
            cum[static_cast<std::size_t>(k + 1)] = cum[static_cast<std::size_t>(k)] + (b - a).norm();
        }
        return cum;
    };
    double mean_length = 0.0;
    for (int i = 0; i < 16; ++i) mean_length += arc(2.0 * pi * i / 16).back() / 16;
    const int rings = std::max(5, static_cast<int>(std::lround(std::sqrt(V * 2.0 * pi * 0.65 / mean_length))));

    std::vector<std::vector<double>> cums;
    std::vector<double> length;
    double total = 0.0;
    for (int i = 0; i < rings; ++i) {
        cums.push_back(arc(2.0 * pi * i / rings));
        length.push_back(cums.back().back());
        total += length.back();
    }
    // Largest-remainder rounding to hit V exactly.
    std::vector<int> count(static_cast<std::size_t>(rings));
    std::vector<std::pair<double, int>> remainder;
    int assigned = 0;
    for (int i = 0; i < rings; ++i) {
        const double exact = V * length[static_cast<std::size_t>(i)] / total;
        count[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(exact));
        assigned += count[static_cast<std::size_t>(i)];
        remainder.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(remainder.begin(), remainder.end());
    for (int k = 0; assigned < V; ++k, ++assigned) ++count[static_cast<std::size_t>(remainder[static_cast<std::size_t>(k)].second)];
    require(*std::min_element(count.begin(), count.end()) >= 3, "torus triangle count too small");

    std::vector<Vec3> verts;
    std::vector<int> first(static_cast<std::size_t>(rings));
    std::vector<std::vector<double>> param(static_cast<std::size_t>(rings));
    for (int i = 0; i < rings; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double phi = 2.0 * pi * i / rings;
        const int n = count[ii];
        const auto& cum = cums[ii];
        first[ii] = static_cast<int>(verts.size());
        for (int k = 0; k < n; ++k) {
            const double u = (k + 0.5 * (i % 2)) / n;
            const double target = u * length[ii];
            const auto it = std::upper_bound(cum.begin(), cum.end(), target);
            const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(), samples));
            const std::size_t lo = hi - 1;
            const double frac = cum[hi] > cum[lo] ? (target - cum[lo]) / (cum[hi] - cum[lo]) : 0.0;
            verts.push_back(torus_point(2.0 * pi * (static_cast<double>(lo) + frac) / samples, phi));
            param[ii].push_back(u);
        }
        param[ii].push_back(param[ii].front() + 1.0);
    }
    std::vector<Element> faces;
    for (int i = 0; i < rings; ++i) {
        const auto a_ring = static_cast<std::size_t>(i);
        const auto b_ring = static_cast<std::size_t>((i + 1) % rings);
        const int na = count[a_ring];
        const int nb = count[b_ring];
        auto a_id = [&](int k) { return first[a_ring] + k % na; };
        auto b_id = [&](int k) { return first[b_ring] + k % nb; };
        int ia = 0;
        int ib = 0;
        while (ia < na || ib < nb) {
            const bool advance_a =
                ib == nb || (ia < na && param[a_ring][static_cast<std::size_t>(ia + 1)] < param[b_ring][static_cast<std::size_t>(ib + 1)]);
            if (advance_a) {
                faces.push_back({a_id(ia), a_id(ia + 1), b_id(ib)});
                ++ia;
            } else {
                faces.push_back({a_id(ia), b_id(ib + 1), b_id(ib)});
                ++ib;
            }
        }
    }
    // Orient outward: compare one face normal with the direction away from the tube centre line.
    {
        const auto& f = faces.front();
        const Vec3 p0 = verts[static_cast<std::size_t>(f[0])];
        const Vec3 n = (verts[static_cast<std::size_t>(f[1])] - p0).cross(verts[static_cast<std::size_t>(f[2])] - p0);
        const double theta = std::atan2(p0.y(), p0.x());
        const Vec3 centre(std::cos(theta), std::sin(theta), 0.3 * std::sin(5.0 * theta));
        if (n.dot(p0 - centre) < 0.0) {
            for (auto& face : faces) std::swap(face[1], face[2]);
        }
    }
    return build_mesh(3, std::move(verts), std::move(faces), BoundaryKind::closed);
}

Mesh box(const ShapeSpec& s)
{
    require(s.dims.minCoeff() > 0.0, "box dimensions must be positive");
    require(s.h > 0.0, "box mesh size must be positive");
    std::array<int, 3> n{};
    for (int k = 0; k < 3; ++k) n[static_cast<std::size_t>(k)] = std::max(1, static_cast<int>(std::lround(s.dims[k] / s.h)));
    Vec3 lo = -0.5 * s.dims;
    if (s.open) lo.z() = 0.0;

    std::map<std::array<int, 3>, int> index;
    std::vector<Vec3> verts;
    auto vertex = [&](std::array<int, 3> key) {
        const auto it = index.find(key);
        if (it != index.end()) return it->second;
        Vec3 p;
        for (int k = 0; k < 3; ++k) {
            const int nk = n[static_cast<std::size_t>(k)];
            const int ik = key[static_cast<std::size_t>(k)];
            p[k] = ik == nk ? lo[k] + s.dims[k] : lo[k] + s.dims[k] * ik / nk;
        }
        verts.push_back(p);
        const int id = static_cast<int>(verts.size()) - 1;
        index.emplace(key, id);
        return id;
    };

    std::vector<Element> faces;
    // Face: fixed axis/value, in-plane axes u and v with e_u x e_v outward.
    auto face = [&](int fixed, int at, int u, int v) {
        const int nu = n[static_cast<std::size_t>(u)];
        const int nv = n[static_cast<std::size_t>(v)];
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < nv; ++j) {
                auto key = [&](int a, int b) {
                    std::array<int, 3> k{};
                    k[static_cast<std::size_t>(fixed)] = at;
                    k[static_cast<std::size_t>(u)] = a;
                    k[static_cast<std::size_t>(v)] = b;
                    return vertex(k);
                };
                const int p00 = key(i, j), p10 = key(i + 1, j), p11 = key(i + 1, j + 1), p01 = key(i, j + 1);
                faces.push_back({p00, p10, p11});
                faces.push_back({p00, p11, p01});
            }
        }
    };
    face(2, n[2], 0, 1);
    if (!s.open) face(2, 0, 1, 0);
    face(0, n[0], 1, 2);
    face(0, 0, 2, 1);
    face(1, n[1], 2, 0);
    face(1, 0, 0, 2);
    return build_mesh(
        3, std::move(verts), std::move(faces), s.open ? BoundaryKind::open_substrate : BoundaryKind::closed);
}

} // namespace

const char* to_string(ShapeKind k)
{
    switch (k) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::half_circle: return "half_circle";
    case ShapeKind::polygon: return "polygon";
    case ShapeKind::grim_reaper: return "grim_reaper";
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::half_sphere: return "half_sphere";
    case ShapeKind::torus_perturbed: return "torus_perturbed";
    case ShapeKind::dumbbell: return "dumbbell";
    case ShapeKind::box: return "box";
    }
    return "?";
}

ShapeKind shape_kind_from_string(const std::string& s)
{
    for (auto k : {ShapeKind::circle, ShapeKind::half_circle, ShapeKind::polygon, ShapeKind::grim_reaper,
                   ShapeKind::sphere, ShapeKind::half_sphere, ShapeKind::torus_perturbed, ShapeKind::dumbbell,
                   ShapeKind::box}) {
        if (s == to_string(k)) return k;
    }
    throw InvalidShape("unknown shape kind '" + s + "'");
}

const char* to_string(Profile p)
{
    switch (p) {
    case Profile::uniform: return "uniform";
    case Profile::graded_left: return "graded_left";
    case Profile::graded_ends: return "graded_ends";
    }
    return "?";
}

Profile profile_from_string(const std::string& s)
{
    for (auto p : {Profile::uniform, Profile::graded_left, Profile::graded_ends}) {
        if (s == to_string(p)) return p;
    }
    throw InvalidShape("unknown profile '" + s + "'");
}

Mesh generate(const ShapeSpec& spec)
{
    require(spec.radius > 0.0, "radius must be positive");
    require(spec.noise >= 0.0 && spec.noise < 0.5, "noise amplitude must lie in [0, 0.5)");
    switch (spec.kind) {
    case ShapeKind::circle: return closed_curve(spec, false);
    case ShapeKind::polygon: return closed_curve(spec, true);
    case ShapeKind::half_circle: return half_circle(spec);
    case ShapeKind::grim_reaper: return grim_reaper(spec);
    case ShapeKind::sphere: return sphere(spec, false);
    case ShapeKind::half_sphere: return sphere(spec, true);
    case ShapeKind::torus_perturbed: return torus(spec);
    case ShapeKind::dumbbell: return dumbbell(spec);
    case ShapeKind::box: return box(spec);
    }
    throw InvalidShape("unhandled shape kind");
}

const char* to_string(ReferenceKind k)
{
    switch (k) {
    case ReferenceKind::shrinking_circle: return "shrinking_circle";
    case ReferenceKind::shrinking_half_circle: return "shrinking_half_circle";
    case ReferenceKind::shrinking_half_sphere: return "shrinking_half_sphere";
    case ReferenceKind::grim_reaper_translate: return "grim_reaper_translate";
    }
    return "?";
}

ReferenceKind reference_kind_from_string(const std::string& s)
{
    for (auto k : {ReferenceKind::shrinking_circle, ReferenceKind::shrinking_half_circle,
                   ReferenceKind::shrinking_half_sphere, ReferenceKind::grim_reaper_translate}) {
        if (s == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown reference '" + s + "'");
}

double ExactReference::extinction_time() const
{
    switch (kind) {
    case ReferenceKind::shrinking_circle:
    case ReferenceKind::shrinking_half_circle: return radius * radius / 2.0;
    case ReferenceKind::shrinking_half_sphere: return radius * radius / 4.0;
    case ReferenceKind::grim_reaper_translate: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double ExactReference::radius_at(double t) const
{
    if (!(t < extinction_time())) throw PastExtinction("time " + std::to_string(t) + " is past extinction");
    const double rate = kind == ReferenceKind::shrinking_half_sphere ? 4.0 : 2.0;
    return std::sqrt(radius * radius - rate * t);
}

Eigen::VectorXd nodal_distance(const Mesh& mesh, const ExactReference& ref, double t)
{
    Eigen::VectorXd d(static_cast<Eigen::Index>(mesh.num_vertices()));
    if (ref.kind == ReferenceKind::grim_reaper_translate) {
        if (t < 0.0) throw PastExtinction("negative time");
        for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
            const Vec3& p = mesh.vertices()[j];
            d(static_cast<Eigen::Index>(j)) = std::abs(p.y() - (-std::log(std::cos(p.x())) + 2.0 + t));
        }
        return d;
    }
    const double r = ref.radius_at(t);
    for (std::size_t j = 0; j < mesh.num_vertices(); ++j) {
        d(static_cast<Eigen::Index>(j)) = std::abs(mesh.vertices()[j].norm() - r);
    }
    return d;
}

double exact_distance(const Mesh& mesh, const ExactReference& ref, double t)
{
    const Eigen::VectorXd d = nodal_distance(mesh, ref, t);
    const Eigen::VectorXd omega = lumped_weights(mesh);
    std::vector<double> terms(static_cast<std::size_t>(d.size()));
    for (Eigen::Index j = 0; j < d.size(); ++j) terms[static_cast<std::size_t>(j)] = omega(j) * d(j) * d(j);
    return std::sqrt(pairwise_sum(terms));
}

double max_nodal_distance(const Mesh& mesh, const ExactReference& ref, double t)
{
    return nodal_distance(mesh, ref, t).maxCoeff();
}

} // namespace geomflow
