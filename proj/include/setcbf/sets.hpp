#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "setcbf/solver.hpp"

namespace setcbf {

// { x | H x <= b }. With origin_form set, b is all-ones and the set is {x | Hx <= 1}.
struct HPolytope {
    Eigen::MatrixXd H;
    Eigen::VectorXd b;
    bool origin_form = false;
};

// Convex hull of columns of V; column 0 is pinned to the origin.
struct VPolytope {
    Eigen::MatrixXd V;  // n x (N_v + 1)
};

// { c + G lambda | ||lambda||_inf <= 1 }
struct Zonotope {
    Eigen::VectorXd c;
    Eigen::MatrixXd G;  // n x N_g
};

struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

using ConvexSet = std::variant<HPolytope, VPolytope, Zonotope, Box>;

int set_dim(const ConvexSet& s);

bool contains(const ConvexSet& s, const Eigen::VectorXd& x, double tol = 1e-9);

// c * S for c >= 0
ConvexSet scale(const ConvexSet& s, double gamma);

// support function  s_S(d) = max_{x in S} d'x
double support(const ConvexSet& s, const Eigen::VectorXd& d);

// a (-) w, realized per row via support functions. If `empty` is given it is set
// to true when the difference has no points.
HPolytope pontryagin_diff(const HPolytope& a, const ConvexSet& w, bool* empty = nullptr);

struct FmOptions {
    std::size_t row_cap = 50000;
    double redundancy_tol = 1e-9;
};

// Pre-set {x | exists u in u_set : A x + B u in omega (-) tightening}, computed by
// Fourier-Motzkin elimination of the u block with redundancy removal.
HPolytope affine_preimage(const HPolytope& omega, const Eigen::MatrixXd& A,
                          const Eigen::MatrixXd& B, const HPolytope& u_set,
                          const std::optional<ConvexSet>& tightening = std::nullopt,
                          const FmOptions& opts = {});

HPolytope remove_redundant(const HPolytope& p, double tol = 1e-9);

// max over sampled unit directions of |s_a(d) - s_b(d)|
double set_distance(const ConvexSet& a, const ConvexSet& b, int directions,
                    std::uint64_t seed = 0x5e7cbf);

// Normalize to {Hx <= 1}; requires b > 0 (origin strictly interior).
HPolytope to_origin_form(const HPolytope& p);

HPolytope box_to_hpoly(const Box& b);

// Any-representation set as an H-polytope where an exact conversion exists
// (H-rep passes through, boxes convert; V-rep/zonotope are rejected).
HPolytope as_hpolytope(const ConvexSet& s);

bool hpoly_is_empty(const HPolytope& p, double tol = 1e-9);

bool check_bounded(const HPolytope& p);

// stack the rows of two H-polytopes over the same space
HPolytope intersect(const HPolytope& a, const HPolytope& b);

// Exact vertex enumeration for n <= 3 (used by verification and tests).
std::vector<Eigen::VectorXd> enumerate_vertices(const HPolytope& p, double tol = 1e-9);

// Radius of the largest origin-centered Euclidean ball inside the set.
// Exact for H-rep/box; sampled lower estimate for V-rep/zonotope.
double inscribed_radius(const ConvexSet& s, int sample_dirs = 512);

}  // namespace setcbf
