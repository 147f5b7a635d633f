#pragma once

#include "geomflow/mesh.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace geomflow {

enum class ShapeKind { circle, half_circle, polygon, grim_reaper, sphere, half_sphere, torus_perturbed, dumbbell, box };

/// Node distribution along a curve parameter u in [0, 1].
/// graded_left: u^2 (fine at the start, coarse at the end);
/// graded_ends: (1 - cos(pi u)) / 2 (fine near both ends).
enum class Profile { uniform, graded_left, graded_ends };

const char* to_string(ShapeKind k);
ShapeKind shape_kind_from_string(const std::string& s);
const char* to_string(Profile p);
Profile profile_from_string(const std::string& s);

struct ShapeSpec {
    ShapeKind kind = ShapeKind::circle;
    double radius = 1.0;
    /// Curves: number of elements (closed curves have as many nodes).
    int nodes = 64;
    /// Octahedron subdivision depth for sphere, half_sphere and dumbbell.
    int level = 2;
    Profile profile = Profile::uniform;
    /// Torus: exact triangle count (even). 0 picks the desk default.
    int triangles = 0;
    /// Box edge lengths (x, y, z) and target mesh size.
    Vec3 dims = Vec3(1.0, 6.0, 1.0);
    double h = 0.2;
    /// Box without its bottom face, standing on z = 0.
    bool open = false;
    /// Relative radial noise amplitude (polygon, sphere) with its seed.
    double noise = 0.0;
    std::uint64_t seed = 0;
    /// Grim reaper: x in [-half_width, half_width].
    double half_width = 0.7853981633974483;
};

class InvalidShape : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Mesh generate(const ShapeSpec& spec);

enum class ReferenceKind { shrinking_circle, shrinking_half_circle, shrinking_half_sphere, grim_reaper_translate };

const char* to_string(ReferenceKind k);
ReferenceKind reference_kind_from_string(const std::string& s);

struct ExactReference {
    ReferenceKind kind = ReferenceKind::shrinking_circle;
    double radius = 1.0; // initial radius

    /// Infinity for the translating grim reaper.
    double extinction_time() const;
    /// Current radius of the shrinking shapes.
    double radius_at(double t) const;
};

class PastExtinction : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Nodal distances d_j to the exact manifold at time t.
Eigen::VectorXd nodal_distance(const Mesh& mesh, const ExactReference& ref, double t);

/// sqrt(sum_j omega_j d_j^2).
double exact_distance(const Mesh& mesh, const ExactReference& ref, double t);

/// max_j d_j.
double max_nodal_distance(const Mesh& mesh, const ExactReference& ref, double t);

} // namespace geomflow
