#pragma once

#include <string>

#include <json.hpp>

#include "rbmlearn/distribution.hpp"
#include "rbmlearn/generators.hpp"
#include "rbmlearn/structure.hpp"
#include "rbmlearn/supervised.hpp"

namespace rbmlearn {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json rbm_to_json(const Rbm& model);
Rbm rbm_from_json(const Json& doc);

/// Plain models omit the label fields; reading one yields a zero coupling.
Json supervised_to_json(const SupervisedRbm& model);
SupervisedRbm supervised_from_json(const Json& doc);

/// {"n", "degree", "ordering", "terms": [{"subset": [...], "coeff": c}, ...]}
Json polynomial_to_json(const SparsePolynomial& poly, int degree = -1);
SparsePolynomial polynomial_from_json(const Json& doc);

Json neighborhoods_to_json(const NeighborhoodMap& map);
Json label_predictor_to_json(const LabelPredictor& pred, const Json& provenance = Json::object());
LabelPredictor label_predictor_from_json(const Json& doc);

Json generator_spec_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const Json& doc);

Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& doc);

/// Binary PGM (P5) of an image in [0, 1].
void write_pgm(const std::string& path, const Matrix<double>& image);

}  // namespace rbmlearn
