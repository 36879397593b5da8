#pragma once

#include <string>

#include <json.hpp>

#include "frugal/generator.hpp"
#include "frugal/margins.hpp"

// JSON round-trips for the generative model types. The schemas here are the
// documented external representation (see README): margins carry a "family"
// discriminator, domain specs bundle margins + copula + propensity, frugal
// specs add causal margins and per-arm joint copulas.
namespace frugal::serialize {

nlohmann::json margin_to_json(const Margin& m);
Margin margin_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json propensity_to_json(const PropensityModel& p);
PropensityModel propensity_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json domain_spec_to_json(const DomainSpec& d);
DomainSpec domain_spec_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json frugal_spec_to_json(const FrugalSpec& s);
FrugalSpec frugal_spec_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace frugal::serialize
