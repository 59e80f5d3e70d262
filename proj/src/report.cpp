#include "lecam/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lecam {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string report_to_csv(const BoundReport& rep) {
    std::ostringstream out;
    out << "# name = " << rep.name << "\n";
    out << "# seed = " << rep.seed << "\n";
    out << "# ratio_sup = " << fmt17(rep.ratio_sup) << "\n";
    if (rep.pinned_constant)
        out << "# pinned_constant = " << fmt17(*rep.pinned_constant) << "\n";
    for (const auto& [k, v] : rep.scalars) out << "# " << k << " = " << fmt17(v) << "\n";
    for (const auto& [k, v] : rep.meta) out << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < rep.columns.size(); ++i)
        out << (i ? "," : "") << rep.columns[i];
    out << "\n";
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
        out << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const BoundReport& rep) {
    nlohmann::json j;
    j["name"] = rep.name;
    j["seed"] = rep.seed;
    j["columns"] = rep.columns;
    j["rows"] = rep.rows;
    j["ratio_sup"] = rep.ratio_sup;
    if (rep.pinned_constant) j["pinned_constant"] = *rep.pinned_constant;
    j["scalars"] = rep.scalars;
    j["meta"] = rep.meta;
    return j;
}

nlohmann::json pyramid_to_json(const CountPyramid& pyr) {
    nlohmann::json j;
    j["k0"] = pyr.k0;
    j["k1"] = pyr.k1;
    j["counts"] = pyr.counts;
    return j;
}

CountPyramid pyramid_from_json(const nlohmann::json& j) {
    CountPyramid pyr;
    pyr.k0 = j.at("k0").get<int>();
    pyr.k1 = j.at("k1").get<int>();
    pyr.counts = j.at("counts").get<std::vector<std::vector<std::int64_t>>>();
    if (pyr.counts.size() != static_cast<std::size_t>(pyr.k1 - pyr.k0 + 1))
        throw std::invalid_argument("pyramid_from_json: level count mismatch");
    if (!pyr.consistent()) throw std::invalid_argument("pyramid_from_json: sibling sums broken");
    return pyr;
}

nlohmann::json stack_to_json(const CoefficientStack& st) {
    nlohmann::json j;
    j["n"] = st.n;
    j["k0"] = st.k0;
    j["k1"] = st.k1;
    j["base"] = st.base;
    j["details"] = st.details;
    j["saturation_count"] = st.saturation_count;
    return j;
}

CoefficientStack stack_from_json(const nlohmann::json& j) {
    CoefficientStack st;
    st.n = j.at("n").get<std::int64_t>();
    st.k0 = j.at("k0").get<int>();
    st.k1 = j.at("k1").get<int>();
    st.base = j.at("base").get<std::vector<double>>();
    st.details = j.at("details").get<std::vector<std::vector<double>>>();
    st.saturation_count = j.value("saturation_count", std::int64_t{0});
    if (st.base.size() != static_cast<std::size_t>(cells_at(st.k0)))
        throw std::invalid_argument("stack_from_json: base size mismatch");
    if (st.details.size() != static_cast<std::size_t>(st.k1 - st.k0))
        throw std::invalid_argument("stack_from_json: detail level count mismatch");
    return st;
}

nlohmann::json path_to_json(const WhiteNoisePath& p) {
    nlohmann::json j;
    j["n"] = p.n;
    j["k1"] = p.k1;
    j["increments"] = p.increments;
    return j;
}

WhiteNoisePath path_from_json(const nlohmann::json& j) {
    WhiteNoisePath p;
    p.n = j.at("n").get<std::int64_t>();
    p.k1 = j.at("k1").get<int>();
    p.increments = j.at("increments").get<std::vector<double>>();
    return p;
}

DensityModel density_from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    const double eps0 = j.at("eps0").get<double>();
    const nlohmann::json& p = j.at("params");
    if (family == "piecewise-constant") {
        return DensityModel::piecewise_constant(p.at("level").get<int>(),
                                                p.at("values").get<std::vector<double>>(),
                                                eps0);
    }
    if (family == "linear") {
        return DensityModel::linear(p.at("a").get<double>(), p.at("b").get<double>(), eps0);
    }
    if (family == "fourier") {
        std::vector<std::complex<double>> coeffs;
        for (const auto& c : p.at("coeffs")) {
            if (c.is_array())
                coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
            else
                coeffs.emplace_back(c.get<double>(), 0.0);
        }
        return DensityModel::fourier(std::move(coeffs), eps0);
    }
    if (family == "single-haar-bump") {
        return DensityModel::haar_bump(p.at("k").get<int>(), p.at("l").get<std::int64_t>(),
                                       p.at("amplitude").get<double>(), eps0);
    }
    throw std::invalid_argument("unknown density family: " + family);
}

nlohmann::json density_to_json(const DensityModel& f) {
    nlohmann::json j;
    j["eps0"] = f.eps0();
    switch (f.family()) {
        case DensityFamily::piecewise_constant:
            j["family"] = "piecewise-constant";
            j["params"] = {{"level", f.pc_level()}, {"values", f.pc_values()}};
            break;
        case DensityFamily::linear:
            j["family"] = "linear";
            j["params"] = {{"a", f.linear_a()}, {"b", f.linear_b()}};
            break;
        case DensityFamily::fourier: {
            j["family"] = "fourier";
            nlohmann::json coeffs = nlohmann::json::array();
            for (const auto& c : f.fourier_coeffs())
                coeffs.push_back({c.real(), c.imag()});
            j["params"] = {{"coeffs", coeffs}};
            break;
        }
        case DensityFamily::haar_bump:
            j["family"] = "single-haar-bump";
            j["params"] = {{"k", f.bump_level()},
                           {"l", f.bump_pos()},
                           {"amplitude", f.bump_amplitude()}};
            break;
    }
    return j;
}

}  // namespace lecam
