#pragma once

#include <string>

namespace lecam {

// Empirically pinned values for the universal constants whose existence the
// inequalities assert. A documented pilot run fixes them once; regression
// tests then recompute and compare to 1e-8. Loaded from a versioned JSON
// document at startup.
struct PinnedConstants {
    int version = 0;
    std::string provenance;

    double thm4_sup_lambda_h2 = 0.0;  // sup over the pilot grid of lambda * H^2
    double thm4_C = 0.0;              // 2 * sup, the constant usable in Eq (4.3)
    double thm5_C1 = 0.0;             // sup H^2 / (b^2/m + b^8/m^2)
    double thm5_D = 0.0;              // sup (H^2 - offset) / ((p-1/2)^2 + m (p-1/2)^4)
    double thm3_C = 0.0;              // = thm4_C
    double thm3_D1 = 0.0;             // 3 D / 8 + 2
    double thm3_D2 = 0.0;             // D / 9 + 8 / 3
    double tusnady_C0 = 0.0;          // sup |z-u| m / (|u|^3 + log m)
    double tusnady_C2 = 0.0;          // sup |z-z'| / (m^{-1/2} + m^{-1} |z|^3)
    double remark4_Cprime = 0.0;      // sup lambda (1 - E sqrt(X/lambda))

    static PinnedConstants load(const std::string& path);
    void save(const std::string& path) const;
    static std::string default_path();
};

}  // namespace lecam
