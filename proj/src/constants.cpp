#include "lecam/constants.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lecam {

std::string PinnedConstants::default_path() {
#ifdef LECAM_DEFAULT_CONSTANTS_PATH
    return LECAM_DEFAULT_CONSTANTS_PATH;
#else
    return "constants/pinned_constants.json";
#endif
}

PinnedConstants PinnedConstants::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pinned constants file: " + path);
    nlohmann::json j;
    in >> j;
    PinnedConstants c;
    c.version = j.at("version").get<int>();
    c.provenance = j.value("provenance", "");
    c.thm4_sup_lambda_h2 = j.at("thm4_sup_lambda_h2").get<double>();
    c.thm4_C = j.at("thm4_C").get<double>();
    c.thm5_C1 = j.at("thm5_C1").get<double>();
    c.thm5_D = j.at("thm5_D").get<double>();
    c.thm3_C = j.at("thm3_C").get<double>();
    c.thm3_D1 = j.at("thm3_D1").get<double>();
    c.thm3_D2 = j.at("thm3_D2").get<double>();
    c.tusnady_C0 = j.at("tusnady_C0").get<double>();
    c.tusnady_C2 = j.at("tusnady_C2").get<double>();
    c.remark4_Cprime = j.at("remark4_Cprime").get<double>();
    return c;
}

void PinnedConstants::save(const std::string& path) const {
    nlohmann::json j;
    j["version"] = version;
    j["provenance"] = provenance;
    j["thm4_sup_lambda_h2"] = thm4_sup_lambda_h2;
    j["thm4_C"] = thm4_C;
    j["thm5_C1"] = thm5_C1;
    j["thm5_D"] = thm5_D;
    j["thm3_C"] = thm3_C;
    j["thm3_D1"] = thm3_D1;
    j["thm3_D2"] = thm3_D2;
    j["tusnady_C0"] = tusnady_C0;
    j["tusnady_C2"] = tusnady_C2;
    j["remark4_Cprime"] = remark4_Cprime;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pinned constants file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace lecam
