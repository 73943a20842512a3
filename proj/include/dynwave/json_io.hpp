#pragma once

#include <filesystem>

#include <json.hpp>

#include "dynwave/filters.hpp"
#include "dynwave/measure.hpp"

namespace dynwave {

using nlohmann::json;

inline Complex parse_complex(const json& j) {
    if (j.is_number()) return Complex{j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2)
        return Complex{j[0].get<double>(), j[1].get<double>()};
    throw std::invalid_argument("complex values are numbers or [re,im] pairs");
}

inline SystemPtr parse_system(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "circle") return circle_map(j.at("N").get<int>());
    if (kind == "cantor") return cantor_map();
    if (kind == "sft") return subshift_map(j.at("matrix").get<std::vector<std::vector<int>>>());
    if (kind == "rational") {
        std::vector<Complex> p1, p2;
        for (const auto& c : j.at("p1")) p1.push_back(parse_complex(c));
        for (const auto& c : j.at("p2")) p2.push_back(parse_complex(c));
        return rational_map(std::move(p1), std::move(p2));
    }
    throw std::invalid_argument("unknown system kind: " + kind);
}

inline SystemPtr load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open system file: " + path);
    json j;
    in >> j;
    return parse_system(j);
}

// Filter document: {"coeffs": [[re,im],...], "offset": n_min} for trig
// polynomials, or {"cylinder": "values.csv"} for explicit cylinder values.
inline Filter parse_filter(const json& j, SystemPtr sys, const std::string& base_dir = ".") {
    if (j.contains("coeffs")) {
        std::vector<Complex> coeffs;
        for (const auto& c : j.at("coeffs")) coeffs.push_back(parse_complex(c));
        const int offset = j.value("offset", 0);
        return trig_filter(std::move(sys), std::move(coeffs), offset);
    }
    if (j.contains("cylinder")) {
        const auto path =
            std::filesystem::path(base_dir) / j.at("cylinder").get<std::string>();
        return cylinder_filter(cylinder_from_csv(std::move(sys), read_lines(path.string())));
    }
    throw std::invalid_argument("filter document needs 'coeffs' or 'cylinder'");
}

inline Filter load_filter(const std::string& path, SystemPtr sys) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open filter file: " + path);
    json j;
    in >> j;
    return parse_filter(j, std::move(sys),
                        std::filesystem::path(path).parent_path().string());
}

// Measure document: {"kind":"bernoulli","weights":[...]} |
// {"kind":"uniform"} | {"kind":"cylinder","csv":"m.csv"} |
// {"kind":"cloud","csv":"c.csv"}.
inline MeasureRep parse_measure(const json& j, SystemPtr sys, const std::string& base_dir = ".") {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli")
        return make_bernoulli(std::move(sys), j.at("weights").get<std::vector<double>>());
    if (kind == "uniform") return uniform_bernoulli(std::move(sys));
    if (kind == "cylinder") {
        const auto path = std::filesystem::path(base_dir) / j.at("csv").get<std::string>();
        return measure_from_csv(std::move(sys), read_lines(path.string()));
    }
    if (kind == "cloud") {
        const auto path = std::filesystem::path(base_dir) / j.at("csv").get<std::string>();
        return cloud_from_csv(read_lines(path.string()));
    }
    throw std::invalid_argument("unknown measure kind: " + kind);
}

inline MeasureRep load_measure(const std::string& path, SystemPtr sys) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open measure file: " + path);
    json j;
    in >> j;
    return parse_measure(j, std::move(sys),
                         std::filesystem::path(path).parent_path().string());
}

inline json system_to_json(const SystemSpec& sys) {
    json j;
    switch (sys.kind()) {
        case SystemKind::Circle:
            j["kind"] = "circle";
            j["N"] = sys.alphabet_size();
            break;
        case SystemKind::Cantor:
            j["kind"] = "cantor";
            break;
        case SystemKind::Subshift:
            j["kind"] = "sft";
            j["matrix"] = sys.adjacency();
            break;
        case SystemKind::Rational: {
            j["kind"] = "rational";
            json p1 = json::array(), p2 = json::array();
            for (const auto& c : sys.numerator()) p1.push_back({c.real(), c.imag()});
            for (const auto& c : sys.denominator()) p2.push_back({c.real(), c.imag()});
            j["p1"] = p1;
            j["p2"] = p2;
            break;
        }
    }
    return j;
}

}  // namespace dynwave
