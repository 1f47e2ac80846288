#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setcbf/errors.hpp"
#include "setcbf/json_io.hpp"
#include "setcbf/rng.hpp"
#include "setcbf/sets.hpp"
#include "support/oracles.hpp"

using namespace setcbf;

namespace {

Box unit_box(int n) {
    return Box{Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
}

VPolytope square_vpoly() {
    VPolytope v;
    v.V.resize(2, 5);
    v.V << 0, 1, 1, -1, -1,
           0, 1, -1, 1, -1;
    return v;
}

}  // namespace

TEST_CASE("contains: boxes, zonotopes, hulls") {
    const ConvexSet box{unit_box(2)};
    CHECK(contains(box, Eigen::Vector2d(0, 0)));
    CHECK_FALSE(contains(box, Eigen::Vector2d(1.000001, 0), 1e-9));
    CHECK(contains(box, Eigen::Vector2d(1.0, 1.0)));

    const ConvexSet zono{Zonotope{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()}};
    CHECK(contains(zono, Eigen::Vector2d(1, 1)));
    CHECK_FALSE(contains(zono, Eigen::Vector2d(1.01, 0.0), 1e-6));

    const ConvexSet hull{square_vpoly()};
    CHECK(contains(hull, Eigen::Vector2d(0.5, 0.5)));
    CHECK_FALSE(contains(hull, Eigen::Vector2d(1.2, 0.0), 1e-6));

    CHECK_THROWS_AS(contains(box, Eigen::Vector3d(0, 0, 0)), ConfigError);
}

TEST_CASE("contains: degenerate flat zonotope stays well posed") {
    Zonotope z;
    z.c = Eigen::Vector2d::Zero();
    z.G.resize(2, 1);
    z.G << 1, 1;  // a segment along the diagonal
    CHECK(contains(ConvexSet{z}, Eigen::Vector2d(0.5, 0.5)));
    CHECK_FALSE(contains(ConvexSet{z}, Eigen::Vector2d(0.5, -0.5), 1e-6));
}

TEST_CASE("scale") {
    const ConvexSet box{unit_box(2)};
    const ConvexSet half = scale(box, 0.5);
    CHECK(contains(half, Eigen::Vector2d(0.5, 0.5)));
    CHECK_FALSE(contains(half, Eigen::Vector2d(0.51, 0.0), 1e-9));

    const ConvexSet same = scale(ConvexSet{square_vpoly()}, 1.0);
    CHECK(std::get<VPolytope>(same).V == square_vpoly().V);

    const ConvexSet doubled = scale(ConvexSet{square_vpoly()}, 2.0);
    CHECK(contains(doubled, Eigen::Vector2d(2.0, 2.0)));
    CHECK(std::get<VPolytope>(doubled).V.col(0).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(scale(box, -0.1), ConfigError);
}

TEST_CASE("support: closed forms and LP agree") {
    CHECK(support(ConvexSet{unit_box(2)}, Eigen::Vector2d(1, 0)) == doctest::Approx(1.0));
    const Zonotope z{Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity()};
    CHECK(support(ConvexSet{z}, Eigen::Vector2d(1, 0)) == doctest::Approx(2.0));
    CHECK(support(ConvexSet{square_vpoly()}, Eigen::Vector2d(1, 1)) == doctest::Approx(2.0));

    const HPolytope hb = box_to_hpoly(unit_box(3));
    Rng rng(11);
    for (int k = 0; k < 25; ++k) {
        const Eigen::VectorXd d = rng.unit_vector(3);
        CHECK(support(ConvexSet{hb}, d) ==
              doctest::Approx(support(ConvexSet{unit_box(3)}, d)).epsilon(1e-7));
    }
}

TEST_CASE("pontryagin difference") {
    const HPolytope a = box_to_hpoly(unit_box(2));

    SUBCASE("box minus box") {
        const HPolytope d = pontryagin_diff(
            a, ConvexSet{Box{Eigen::Vector2d(-0.1, -0.1), Eigen::Vector2d(0.1, 0.1)}});
        CHECK(contains(ConvexSet{d}, Eigen::Vector2d(0.9, 0.9)));
        CHECK_FALSE(contains(ConvexSet{d}, Eigen::Vector2d(0.91, 0.0), 1e-9));
    }
    SUBCASE("minus the origin is the identity") {
        const HPolytope d =
            pontryagin_diff(a, ConvexSet{Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)}});
        CHECK((d.b - a.b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("minus a zonotope uses the generator support") {
        // support of zonotope(0, 0.2 I) in axis directions is 0.2 -> box [-0.8, 0.8]^2
        const Zonotope w{Eigen::Vector2d::Zero(), 0.2 * Eigen::Matrix2d::Identity()};
        const HPolytope d = pontryagin_diff(a, ConvexSet{w});
        CHECK(d.b.maxCoeff() == doctest::Approx(0.8));
        CHECK(d.b.minCoeff() == doctest::Approx(0.8));
    }
    SUBCASE("emptiness is flagged") {
        bool empty = false;
        pontryagin_diff(a, ConvexSet{Box{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)}}, &empty);
        CHECK(empty);
    }
    SUBCASE("difference then sum under-approximates") {
        Rng rng(5);
        const ConvexSet w{Box{Eigen::Vector2d(-0.3, -0.2), Eigen::Vector2d(0.3, 0.2)}};
        const HPolytope d = pontryagin_diff(a, w);
        for (int k = 0; k < 50; ++k) {
            const Eigen::VectorXd dir = rng.unit_vector(2);
            CHECK(support(ConvexSet{d}, dir) + support(w, dir) <=
                  support(ConvexSet{a}, dir) + 1e-9);
        }
    }
}

TEST_CASE("remove_redundant") {
    SUBCASE("drops the dominated row") {
        HPolytope p;
        p.H.resize(3, 1);
        p.H << 1, 1, -1;
        p.b.resize(3);
        p.b << 1, 2, 0;
        const HPolytope r = remove_redundant(p);
        CHECK(r.H.rows() == 2);
        CHECK(support(ConvexSet{r}, Eigen::VectorXd::Ones(1)) == doctest::Approx(1.0));
        CHECK(support(ConvexSet{r}, -Eigen::VectorXd::Ones(1)) == doctest::Approx(0.0));
    }
    SUBCASE("duplicated box rows collapse to 2n") {
        const HPolytope box = box_to_hpoly(unit_box(3));
        HPolytope dup;
        dup.H.resize(12, 3);
        dup.H << box.H, box.H;
        dup.b.resize(12);
        dup.b << box.b, box.b;
        CHECK(remove_redundant(dup).H.rows() == 6);
    }
    SUBCASE("random 2-D polytope keeps its vertices") {
        Rng rng(99);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd b;
            const Eigen::MatrixXd H = oracles::random_polytope_rows(rng, 2, 16, b);
            const HPolytope p{H, b, false};
            const auto before = enumerate_vertices(p);
            const HPolytope r = remove_redundant(p);
            const auto after = enumerate_vertices(r);
            REQUIRE(before.size() == after.size());
            for (const auto& v : before) {
                double best = 1e9;
                for (const auto& w : after) best = std::min(best, (v - w).norm());
                CHECK(best < 1e-7);
            }
        }
    }
    SUBCASE("empty polytope is rejected") {
        HPolytope p;
        p.H.resize(2, 1);
        p.H << 1, -1;
        p.b.resize(2);
        p.b << -1, -1;  // z <= -1 and z >= 1
        CHECK_THROWS_AS(remove_redundant(p), ConfigError);
    }
}

TEST_CASE("affine_preimage") {
    SUBCASE("scalar x+ = x + u, |u| <= 1, target [-1, 1] gives [-2, 2]") {
        const HPolytope omega = box_to_hpoly(unit_box(1));
        const HPolytope uset = box_to_hpoly(unit_box(1));
        const HPolytope pre = affine_preimage(omega, Eigen::MatrixXd::Identity(1, 1),
                                              Eigen::MatrixXd::Identity(1, 1), uset);
        CHECK(support(ConvexSet{pre}, Eigen::VectorXd::Ones(1)) == doctest::Approx(2.0));
        CHECK(support(ConvexSet{pre}, -Eigen::VectorXd::Ones(1)) == doctest::Approx(2.0));
    }
    SUBCASE("vanishing dynamics leave only trivial rows") {
        const HPolytope omega = box_to_hpoly(unit_box(2));
        const HPolytope uset = box_to_hpoly(unit_box(1));
        const HPolytope pre =
            affine_preimage(omega, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1), uset);
        CHECK(pre.H.rows() == 0);  // all of R^n
        CHECK(contains(ConvexSet{pre}, Eigen::Vector2d(100.0, -50.0)));
    }
    SUBCASE("double integrator matches the grid oracle") {
        Eigen::MatrixXd A(2, 2), B(2, 1);
        A << 1, 1, 0, 1;
        B << 0.5, 1;
        const HPolytope omega = box_to_hpoly(unit_box(2));
        const HPolytope uset = box_to_hpoly(unit_box(1));
        const HPolytope pre = affine_preimage(omega, A, B, uset);
        for (const auto& x : oracles::grid_2d(-2.0, 2.0, 41)) {
            // oracle: one-dimensional input interval intersection
            double ulo = -1.0, uhi = 1.0;
            const Eigen::Vector2d ax = A * x;
            for (int r = 0; r < 4; ++r) {
                const double hb = (omega.H.row(r) * B)(0);
                const double rhs = omega.b(r) - omega.H.row(r).dot(ax);
                if (hb > 1e-12) uhi = std::min(uhi, rhs / hb);
                else if (hb < -1e-12) ulo = std::max(ulo, rhs / hb);
                else if (rhs < 0) { ulo = 1e9; uhi = -1e9; }
            }
            const bool oracle_in = ulo <= uhi;
            const bool pre_in = contains(ConvexSet{pre}, x, 1e-9);
            const double boundary_gap = (pre.H * x - pre.b).cwiseAbs().minCoeff();
            if (boundary_gap > 1e-6) CHECK(oracle_in == pre_in);
        }
    }
    SUBCASE("tightened target shrinks the preimage") {
        const HPolytope omega = box_to_hpoly(unit_box(1));
        const HPolytope uset = box_to_hpoly(unit_box(1));
        const ConvexSet w{
            Box{Eigen::VectorXd::Constant(1, -0.25), Eigen::VectorXd::Constant(1, 0.25)}};
        const HPolytope pre = affine_preimage(omega, Eigen::MatrixXd::Identity(1, 1),
                                              Eigen::MatrixXd::Identity(1, 1), uset, w);
        CHECK(support(ConvexSet{pre}, Eigen::VectorXd::Ones(1)) == doctest::Approx(1.75));
    }
    SUBCASE("row cap raises a resource error") {
        Rng rng(3);
        Eigen::VectorXd bx, bu;
        const Eigen::MatrixXd Hx = oracles::random_polytope_rows(rng, 3, 30, bx);
        const Eigen::MatrixXd Hu = oracles::random_polytope_rows(rng, 3, 30, bu);
        FmOptions opts;
        opts.row_cap = 10;
        CHECK_THROWS_AS(affine_preimage(HPolytope{Hx, bx, false}, Eigen::MatrixXd::Identity(3, 3),
                                        Eigen::MatrixXd::Identity(3, 3), HPolytope{Hu, bu, false},
                                        std::nullopt, opts),
                        ResourceError);
    }
}

TEST_CASE("set_distance") {
    const ConvexSet a{unit_box(2)};
    CHECK(set_distance(a, a, 64) == doctest::Approx(0.0));
    const double d = set_distance(ConvexSet{Box{Eigen::VectorXd::Constant(1, -1.0),
                                                Eigen::VectorXd::Constant(1, 1.0)}},
                                  ConvexSet{Box{Eigen::VectorXd::Constant(1, -0.9),
                                                Eigen::VectorXd::Constant(1, 0.9)}},
                                  64);
    CHECK(d == doctest::Approx(0.1).epsilon(1e-9));
    const double half_1d = set_distance(ConvexSet{Box{Eigen::VectorXd::Constant(1, -1.0),
                                                      Eigen::VectorXd::Constant(1, 1.0)}},
                                        ConvexSet{Box{Eigen::VectorXd::Constant(1, -0.5),
                                                      Eigen::VectorXd::Constant(1, 0.5)}},
                                        64);
    CHECK(half_1d == doctest::Approx(0.5).epsilon(1e-9));
    // in 2-D the gap peaks at diagonal directions: 0.5 * ||d||_1 <= 0.5 sqrt(2)
    const double half_2d = set_distance(a, scale(a, 0.5), 256);
    CHECK(half_2d <= 0.5 * std::sqrt(2.0) + 1e-9);
    CHECK(half_2d > 0.5 - 1e-9);
}

TEST_CASE("origin form normalization") {
    HPolytope p;
    p.H.resize(2, 1);
    p.H << 2, -1;
    p.b.resize(2);
    p.b << 4, 1;  // x <= 2, x >= -1
    const HPolytope o = to_origin_form(p);
    CHECK(o.origin_form);
    CHECK((o.b.array() == 1.0).all());
    CHECK(support(ConvexSet{o}, Eigen::VectorXd::Ones(1)) == doctest::Approx(2.0));

    HPolytope bad;
    bad.H.resize(2, 1);
    bad.H << 1, -1;
    bad.b.resize(2);
    bad.b << 1, 0;  // origin on the boundary
    CHECK_THROWS_AS(to_origin_form(bad), ConfigError);
}

TEST_CASE("boundedness check") {
    CHECK(check_bounded(box_to_hpoly(unit_box(3))));
    HPolytope open;
    open.H.resize(1, 2);
    open.H << 1, 0;
    open.b = Eigen::VectorXd::Ones(1);
    CHECK_FALSE(check_bounded(open));
}

TEST_CASE("scaled-set membership (compact convex sets with 0, gamma in [0,1])") {
    Rng rng(314);
    for (int trial = 0; trial < 100; ++trial) {
        const int pick = trial % 3;
        const int n = 2 + static_cast<int>(rng.next_u64() % 2);
        ConvexSet set{unit_box(n)};
        Eigen::VectorXd member;
        if (pick == 0) {
            member = rng.uniform_vector(n, -1.0, 1.0);
        } else if (pick == 1) {
            Zonotope z;
            z.c = Eigen::VectorXd::Zero(n);
            z.G.resize(n, n + 1);
            for (Eigen::Index i = 0; i < z.G.rows(); ++i)
                for (Eigen::Index j = 0; j < z.G.cols(); ++j) z.G(i, j) = rng.uniform(-1.0, 1.0);
            set = z;
            member = z.G * rng.uniform_vector(static_cast<int>(z.G.cols()), -1.0, 1.0);
        } else {
            Eigen::VectorXd b;
            const Eigen::MatrixXd H = oracles::random_polytope_rows(rng, n, 4, b);
            set = HPolytope{H, b, false};
            // walk along a random ray to the boundary, then shrink inward
            const Eigen::VectorXd d = rng.unit_vector(n);
            double t = kInf;
            for (Eigen::Index r = 0; r < H.rows(); ++r) {
                const double hd = H.row(r).dot(d);
                if (hd > 1e-12) t = std::min(t, b(r) / hd);
            }
            member = rng.uniform() * t * d;
        }
        REQUIRE(contains(set, member, 1e-7));
        const double g = rng.uniform();
        CHECK(contains(set, g * member, 1e-7));               // Lemma-2 style containment
        CHECK(contains(scale(set, g), g * member, 1e-7));     // definition of scaling
    }
}

TEST_CASE("inscribed ball scales with the set") {
    Rng rng(2718);
    HPolytope p;
    p.H.resize(5, 2);
    p.H << 1, 0, -1, 0, 0, 1, 0, -1, 1, 1;
    p.b.resize(5);
    p.b << 1, 1, 1, 1, 1.2;
    const double r = inscribed_radius(ConvexSet{p});
    REQUIRE(r > 0.0);
    // support-function certificate that the ball fits
    for (int k = 0; k < 64; ++k) {
        const Eigen::VectorXd d = rng.unit_vector(2);
        CHECK(support(ConvexSet{p}, d) >= r - 1e-9);
    }
    for (const double lambda : {0.0, 0.3, 1.0, 2.0}) {
        const ConvexSet scaled = scale(ConvexSet{p}, lambda);
        for (int k = 0; k < 32; ++k) {
            const Eigen::VectorXd d = rng.unit_vector(2);
            CHECK(contains(scaled, lambda * (0.999 * r) * d, 1e-7));
        }
    }
}

TEST_CASE("json round trip across representations") {
    Rng rng(1234);
    const std::vector<ConvexSet> sets = {
        ConvexSet{unit_box(3)},
        ConvexSet{box_to_hpoly(unit_box(2))},
        ConvexSet{to_origin_form(box_to_hpoly(unit_box(2)))},
        ConvexSet{square_vpoly()},
        ConvexSet{Zonotope{Eigen::Vector2d(0.1, -0.2), Eigen::Matrix2d::Identity()}},
    };
    for (const auto& s : sets) {
        const ConvexSet t = set_from_json(set_to_json(s));
        REQUIRE(set_dim(t) == set_dim(s));
        for (int k = 0; k < 40; ++k) {
            const Eigen::VectorXd d = rng.unit_vector(set_dim(s));
            CHECK(support(t, d) == doctest::Approx(support(s, d)).epsilon(1e-12));
        }
    }
}
