#include "spikegam/model.hpp"

#include <cmath>

#include "spikegam/errors.hpp"

namespace spikegam {

std::string_view to_string(ResponseType type) {
    return type == ResponseType::Gaussian ? "gaussian" : "bernoulli";
}

ResponseType parse_response_type(std::string_view name) {
    if (name == "gaussian") return ResponseType::Gaussian;
    if (name == "bernoulli" || name == "binary") return ResponseType::Bernoulli;
    throw InvalidParameter("unknown response family '" + std::string(name) + "'");
}

void Hyperparameters::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidParameter(std::string(name) + " must be positive and finite");
    };
    positive(sigma_beta0, "sigma_beta0");
    positive(s_beta, "s_beta");
    positive(s_eps, "s_eps");
    positive(s_u, "s_u");
    if (!(rho_beta >= 0.0 && rho_beta <= 1.0)) throw InvalidParameter("rho_beta must lie in [0,1]");
    if (!(rho_u >= 0.0 && rho_u <= 1.0)) throw InvalidParameter("rho_u must lie in [0,1]");
}

}  // namespace spikegam
