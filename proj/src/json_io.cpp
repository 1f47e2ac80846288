#include "setcbf/json_io.hpp"

#include <fstream>

#include "setcbf/discretize.hpp"
#include "setcbf/errors.hpp"

namespace setcbf {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("json: expected a non-empty matrix");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw ConfigError("json: ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("json: expected a vector");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json set_to_json(const ConvexSet& s) {
    json j;
    if (std::holds_alternative<HPolytope>(s)) {
        const auto& p = std::get<HPolytope>(s);
        j["rep"] = "hpoly";
        j["H"] = matrix_to_json(p.H);
        j["b"] = vector_to_json(p.b);
        j["origin_form"] = p.origin_form;
    } else if (std::holds_alternative<VPolytope>(s)) {
        const auto& v = std::get<VPolytope>(s);
        j["rep"] = "vpoly";
        j["vertices"] = matrix_to_json(v.V.transpose());  // one vertex per row
    } else if (std::holds_alternative<Zonotope>(s)) {
        const auto& z = std::get<Zonotope>(s);
        j["rep"] = "zonotope";
        j["c"] = vector_to_json(z.c);
        j["G"] = matrix_to_json(z.G);
    } else {
        const auto& b = std::get<Box>(s);
        j["rep"] = "box";
        j["lo"] = vector_to_json(b.lo);
        j["hi"] = vector_to_json(b.hi);
    }
    return j;
}

ConvexSet set_from_json(const json& j) {
    const std::string rep = j.at("rep").get<std::string>();
    if (rep == "hpoly") {
        HPolytope p;
        p.H = matrix_from_json(j.at("H"));
        p.b = vector_from_json(j.at("b"));
        p.origin_form = j.value("origin_form", false);
        if (p.b.size() != p.H.rows()) throw ConfigError("json: H/b size mismatch");
        if (p.origin_form && (p.b.array() - 1.0).abs().maxCoeff() > 1e-12)
            throw ConfigError("json: origin_form requires b = 1");
        return p;
    }
    if (rep == "vpoly") {
        VPolytope v;
        v.V = matrix_from_json(j.at("vertices")).transpose();
        if (v.V.col(0).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("json: vertex 0 must be the origin");
        return v;
    }
    if (rep == "zonotope") {
        Zonotope z;
        z.c = vector_from_json(j.at("c"));
        z.G = matrix_from_json(j.at("G"));
        if (z.G.rows() != z.c.size()) throw ConfigError("json: zonotope c/G mismatch");
        return z;
    }
    if (rep == "box") {
        Box b;
        b.lo = vector_from_json(j.at("lo"));
        b.hi = vector_from_json(j.at("hi"));
        if (b.lo.size() != b.hi.size()) throw ConfigError("json: box lo/hi mismatch");
        return b;
    }
    throw ConfigError("json: unknown set representation '" + rep + "'");
}

json model_to_json(const LtiModel& m) {
    json j;
    j["A"] = matrix_to_json(m.A);
    j["B"] = matrix_to_json(m.B);
    if (m.G) j["G"] = matrix_to_json(*m.G);
    return j;
}

LtiModel model_from_json(const json& j) {
    LtiModel m;
    if (j.contains("Ac")) {
        const Eigen::MatrixXd Ac = matrix_from_json(j.at("Ac"));
        const Eigen::MatrixXd Bc = matrix_from_json(j.at("Bc"));
        const double dt = j.at("dt").get<double>();
        std::tie(m.A, m.B) = exact_discretize(Ac, Bc, dt);
    } else {
        m.A = matrix_from_json(j.at("A"));
        m.B = matrix_from_json(j.at("B"));
    }
    if (j.contains("G")) m.G = matrix_from_json(j.at("G"));
    m.validate();
    return m;
}

json approx_to_json(const ApproxCbf& a) {
    json j;
    j["model"] = a.model == FitConfig::Model::Network ? "network" : "polynomial";
    j["epsilon"] = a.epsilon;
    j["domain"] = {{"lo", vector_to_json(a.domain.lo)}, {"hi", vector_to_json(a.domain.hi)}};
    j["meta"] = {{"seed", a.seed}, {"n_samples", a.n_samples}, {"max_val_error", a.max_val_error}};
    if (a.model == FitConfig::Model::Network) {
        json layers = json::array();
        for (std::size_t l = 0; l < a.weights.size(); ++l)
            layers.push_back({{"W", matrix_to_json(a.weights[l])},
                              {"b", vector_to_json(a.biases[l])}});
        j["layers"] = layers;
        j["in_shift"] = vector_to_json(a.in_shift);
        j["in_scale"] = vector_to_json(a.in_scale);
        j["out_scale"] = a.out_scale;
    } else {
        j["degree"] = a.degree;
        j["exponents"] = a.exponents;
        j["coeffs"] = vector_to_json(a.coeffs);
    }
    return j;
}

ApproxCbf approx_from_json(const json& j) {
    ApproxCbf a;
    const std::string kind = j.at("model").get<std::string>();
    a.model = kind == "network" ? FitConfig::Model::Network : FitConfig::Model::Polynomial;
    a.epsilon = j.at("epsilon").get<double>();
    a.domain.lo = vector_from_json(j.at("domain").at("lo"));
    a.domain.hi = vector_from_json(j.at("domain").at("hi"));
    if (j.contains("meta")) {
        a.seed = j["meta"].value("seed", 0ULL);
        a.n_samples = j["meta"].value("n_samples", 0);
        a.max_val_error = j["meta"].value("max_val_error", 0.0);
    }
    if (a.model == FitConfig::Model::Network) {
        for (const auto& layer : j.at("layers")) {
            a.weights.push_back(matrix_from_json(layer.at("W")));
            a.biases.push_back(vector_from_json(layer.at("b")));
        }
        a.in_shift = vector_from_json(j.at("in_shift"));
        a.in_scale = vector_from_json(j.at("in_scale"));
        a.out_scale = j.at("out_scale").get<double>();
    } else {
        a.degree = j.at("degree").get<int>();
        a.exponents = j.at("exponents").get<std::vector<std::vector<int>>>();
        a.coeffs = vector_from_json(j.at("coeffs"));
    }
    return a;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace setcbf
