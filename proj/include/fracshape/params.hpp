#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fracshape {

/// Isotropic operator parameters. `kappa` multiplies the fractional energy
/// (it stands in for the undetermined normalization constant); it has no
/// effect on the local s = 1 branch.
struct IsoParams {
    double s = 0.5;
    double p = 2.0;
    double kappa = 1.0;

    void validate() const {
        if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("params: s must lie in (0, 1]");
        if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("params: p must lie in (1, inf)");
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("params: kappa must be > 0");
    }
    bool local() const { return s == 1.0; }
    bool operator==(const IsoParams&) const = default;
};

/// Per-axis orders and exponents of the anisotropic (pseudo) operator.
struct AnisoParams {
    std::vector<double> s_vec{0.5};
    std::vector<double> p_vec{2.0};

    std::size_t dim() const { return s_vec.size(); }

    /// Harmonic mean of the orders.
    double s_bar() const {
        double acc = 0.0;
        for (double s : s_vec) acc += 1.0 / s;
        return 1.0 / (acc / static_cast<double>(s_vec.size()));
    }

    /// Harmonic mean of s_i * p_i.
    double sp_bar() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < s_vec.size(); ++i) acc += 1.0 / (s_vec[i] * p_vec[i]);
        return 1.0 / (acc / static_cast<double>(s_vec.size()));
    }

    /// Critical exponent (n sp_bar / s_bar) / (n - sp_bar); +inf when sp_bar >= n.
    double p_star() const {
        const double n = static_cast<double>(s_vec.size());
        const double den = n - sp_bar();
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return (n * sp_bar() / s_bar()) / den;
    }

    bool operator==(const AnisoParams&) const = default;
};

using OperatorParams = std::variant<IsoParams, AnisoParams>;

/// Exponent used for norms and Rayleigh quotients: p for isotropic
/// parameters, p_1 (the smallest) for anisotropic ones.
inline double norm_exponent(const OperatorParams& params) {
    if (const auto* iso = std::get_if<IsoParams>(&params)) return iso->p;
    const auto& a = std::get<AnisoParams>(params);
    return a.p_vec.empty() ? 2.0 : a.p_vec.front();
}

struct AnisoCondition {
    std::string name;
    bool applicable = true;
    bool passed = false;
    std::string detail;
};

struct AnisoReport {
    double s_bar = 0.0;
    double sp_bar = 0.0;
    double p_star = 0.0;
    std::vector<AnisoCondition> conditions;

    bool admissible() const {
        for (const auto& c : conditions) {
            if (c.applicable && !c.passed) return false;
        }
        return true;
    }

    std::string first_violation() const {
        for (const auto& c : conditions) {
            if (c.applicable && !c.passed) return c.name + ": " + c.detail;
        }
        return {};
    }
};

/**
 * Checks the admissibility conditions on (s_i, p_i):
 *   orders:      0 < s_i <= 1
 *   sorted:      1 < p_1 <= ... <= p_n < inf
 *   subcritical: sp_bar < n and p_n < p*_s
 * The subcritical condition is reported as inapplicable in 1D and whenever
 * n - sp_bar vanishes or turns negative, since p*_s is then undefined.
 */
inline AnisoReport validate_aniso(const AnisoParams& params, int dim) {
    if (params.s_vec.size() != static_cast<std::size_t>(dim) || params.p_vec.size() != static_cast<std::size_t>(dim)) {
        throw std::invalid_argument("validate_aniso: s_vec and p_vec need one entry per axis");
    }
    AnisoReport r;
    AnisoCondition orders{"orders", true, true, "0 < s_i <= 1"};
    for (double s : params.s_vec) {
        if (!(s > 0.0 && s <= 1.0)) {
            orders.passed = false;
            orders.detail = "s_i = " + std::to_string(s) + " outside (0, 1]";
        }
    }
    AnisoCondition sorted{"sorted", true, true, "1 < p_1 <= ... <= p_n < inf"};
    for (std::size_t i = 0; i < params.p_vec.size(); ++i) {
        const double p = params.p_vec[i];
        if (!(p > 1.0) || !std::isfinite(p)) {
            sorted.passed = false;
            sorted.detail = "p_" + std::to_string(i + 1) + " outside (1, inf)";
        } else if (i > 0 && p < params.p_vec[i - 1]) {
            sorted.passed = false;
            sorted.detail = "p_" + std::to_string(i) + " > p_" + std::to_string(i + 1);
        }
    }
    r.conditions.push_back(orders);
    r.conditions.push_back(sorted);
    if (!orders.passed || !sorted.passed) {
        r.conditions.push_back({"subcritical", false, false, "skipped: earlier condition failed"});
        return r;
    }

    r.s_bar = params.s_bar();
    r.sp_bar = params.sp_bar();
    const double n = static_cast<double>(dim);
    AnisoCondition crit{"subcritical", true, false, ""};
    if (dim == 1) {
        crit.applicable = false;
        crit.detail = "skipped in 1D";
        r.p_star = params.p_star();
    } else if (n - r.sp_bar <= 0.0) {
        crit.applicable = false;
        crit.detail = "n - sp_bar = " + std::to_string(n - r.sp_bar) + ", p*_s undefined";
        r.p_star = std::numeric_limits<double>::infinity();
    } else {
        r.p_star = params.p_star();
        crit.passed = r.sp_bar < n && params.p_vec.back() < r.p_star;
        crit.detail = crit.passed ? "sp_bar < n and p_n < p*_s" : "p_n >= p*_s";
    }
    r.conditions.push_back(crit);
    return r;
}

inline void require_admissible(const AnisoParams& params, int dim) {
    const auto r = validate_aniso(params, dim);
    if (!r.admissible()) throw std::invalid_argument("aniso params inadmissible: " + r.first_violation());
}

}  // namespace fracshape
