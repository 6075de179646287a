#include "rbmlearn/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace rbmlearn {

namespace {

Json vector_json(const Vector<double>& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Vector<double> vector_from(const Json& arr, Eigen::Index expected, const std::string& field) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected)
    throw std::runtime_error("field '" + field + "' must be an array of " + std::to_string(expected) + " numbers");
  Vector<double> out(expected);
  for (Eigen::Index k = 0; k < expected; ++k) out(k) = arr[static_cast<std::size_t>(k)].get<double>();
  return out;
}

void check_version(const Json& doc) {
  const int v = doc.value("format_version", kFormatVersion);
  if (v != kFormatVersion) throw std::runtime_error("unsupported format_version " + std::to_string(v));
}

}  // namespace

Json rbm_to_json(const Rbm& model) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n_visible"] = model.n_visible();
  doc["n_hidden"] = model.n_hidden();
  Json w = Json::array();
  for (int i = 0; i < model.n_visible(); ++i)
    for (int j = 0; j < model.n_hidden(); ++j) w.push_back(model.weights(i, j));
  doc["W"] = std::move(w);
  doc["b_vis"] = vector_json(model.visible_bias);
  doc["b_hid"] = vector_json(model.hidden_bias);
  return doc;
}

Rbm rbm_from_json(const Json& doc) {
  check_version(doc);
  const int n = doc.at("n_visible").get<int>(), nh = doc.at("n_hidden").get<int>();
  if (n < 1 || nh < 0) throw std::runtime_error("model needs n_visible >= 1 and n_hidden >= 0");
  const Vector<double> flat = vector_from(doc.at("W"), static_cast<Eigen::Index>(n) * nh, "W");
  Matrix<double> w(n, nh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nh; ++j) w(i, j) = flat(static_cast<Eigen::Index>(i) * nh + j);
  return Rbm(std::move(w), vector_from(doc.at("b_vis"), n, "b_vis"), vector_from(doc.at("b_hid"), nh, "b_hid"));
}

Json supervised_to_json(const SupervisedRbm& model) {
  Json doc = rbm_to_json(model.base);
  doc["w_label"] = vector_json(model.w_label);
  doc["b_label"] = model.b_label;
  return doc;
}

SupervisedRbm supervised_from_json(const Json& doc) {
  SupervisedRbm out;
  out.base = rbm_from_json(doc);
  out.w_label = doc.contains("w_label") ? vector_from(doc["w_label"], out.base.n_hidden(), "w_label")
                                        : Vector<double>::Zero(out.base.n_hidden());
  out.b_label = doc.value("b_label", 0.0);
  out.validate();
  return out;
}

Json polynomial_to_json(const SparsePolynomial& poly, int degree) {
  Json doc;
  doc["n"] = poly.n();
  if (degree < 0)
    for (const auto& [s, c] : poly.terms()) degree = std::max(degree, static_cast<int>(s.size()));
  doc["degree"] = std::max(degree, 0);
  doc["ordering"] = MonomialBasis::kOrdering;
  Json terms = Json::array();
  for (const auto& [s, c] : poly.terms()) terms.push_back({{"subset", s}, {"coeff", c}});
  doc["terms"] = std::move(terms);
  return doc;
}

SparsePolynomial polynomial_from_json(const Json& doc) {
  if (doc.value("ordering", std::string(MonomialBasis::kOrdering)) != MonomialBasis::kOrdering)
    throw std::runtime_error("unsupported polynomial ordering tag");
  SparsePolynomial out(doc.at("n").get<int>());
  for (const Json& t : doc.at("terms")) out.set(t.at("subset").get<Subset>(), t.at("coeff").get<double>());
  return out;
}

Json neighborhoods_to_json(const NeighborhoodMap& map) {
  Json doc;
  doc["n"] = map.n;
  doc["eta"] = map.eta;
  Json adj = Json::array();
  for (const Subset& s : map.neighbors) adj.push_back(s);
  doc["neighbors"] = std::move(adj);
  Json pairs = Json::array();
  for (const PairResult& r : map.pairs) {
    pairs.push_back({{"i", r.i},
                     {"j", r.j},
                     {"drop", r.drop},
                     {"drop_forward", r.forward.drop()},
                     {"drop_backward", r.backward.drop()},
                     {"decision", r.neighbor ? "neighbor" : "non-neighbor"},
                     {"borderline", r.borderline},
                     {"constant_column", r.constant_column}});
  }
  doc["pairs"] = std::move(pairs);
  const SampleDiagnostics& s = map.samples;
  doc["samples"] = {{"exact", s.exact},        {"m_train", s.m_train},         {"m_holdout", s.m_holdout},
                    {"delta_pair", s.delta_pair}, {"excess_bound", s.excess_bound}, {"required_m", s.required_m},
                    {"sufficient", s.sufficient}};
  return doc;
}

Json label_predictor_to_json(const LabelPredictor& pred, const Json& provenance) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["n"] = pred.n;
  doc["f_plus"] = polynomial_to_json(pred.f_plus);
  doc["f_minus"] = polynomial_to_json(pred.f_minus);
  doc["bias"] = pred.bias;
  if (pred.extended_coeffs) doc["extended_coeffs"] = vector_json(*pred.extended_coeffs);
  doc["provenance"] = provenance;
  return doc;
}

LabelPredictor label_predictor_from_json(const Json& doc) {
  check_version(doc);
  LabelPredictor pred;
  pred.n = doc.at("n").get<int>();
  pred.f_plus = polynomial_from_json(doc.at("f_plus"));
  pred.f_minus = polynomial_from_json(doc.at("f_minus"));
  pred.bias = doc.at("bias").get<double>();
  if (doc.contains("extended_coeffs")) pred.extended_coeffs = vector_from(doc["extended_coeffs"], pred.n, "extended_coeffs");
  return pred;
}

Json generator_spec_to_json(const GeneratorSpec& spec) {
  Json doc;
  doc["topology"] = topology_name(spec.topology);
  doc["n_visible"] = spec.n_visible;
  doc["n_hidden"] = spec.n_hidden;
  doc["grid_cols"] = spec.grid_cols;
  doc["weight_scale"] = spec.weight_scale;
  doc["sign_mode"] = sign_mode_name(spec.sign_mode);
  doc["alpha"] = spec.alpha;
  doc["edge_probability"] = spec.edge_probability;
  doc["visible_bias_scale"] = spec.visible_bias_scale;
  doc["hidden_bias_scale"] = spec.hidden_bias_scale;
  doc["dobrushin_scale"] = spec.dobrushin_scale;
  if (spec.label_coupling)
    doc["label_coupling"] = {{"scale", spec.label_coupling->scale}, {"bias", spec.label_coupling->bias}};
  else
    doc["label_coupling"] = nullptr;
  doc["seed"] = spec.seed;
  return doc;
}

GeneratorSpec generator_spec_from_json(const Json& doc) {
  GeneratorSpec spec;
  spec.topology = parse_topology(doc.value("topology", topology_name(spec.topology)));
  spec.n_visible = doc.value("n_visible", spec.n_visible);
  spec.n_hidden = doc.value("n_hidden", spec.n_hidden);
  spec.grid_cols = doc.value("grid_cols", spec.grid_cols);
  spec.weight_scale = doc.value("weight_scale", spec.weight_scale);
  spec.sign_mode = parse_sign_mode(doc.value("sign_mode", sign_mode_name(spec.sign_mode)));
  spec.alpha = doc.value("alpha", spec.alpha);
  spec.edge_probability = doc.value("edge_probability", spec.edge_probability);
  spec.visible_bias_scale = doc.value("visible_bias_scale", spec.visible_bias_scale);
  spec.hidden_bias_scale = doc.value("hidden_bias_scale", spec.hidden_bias_scale);
  spec.dobrushin_scale = doc.value("dobrushin_scale", spec.dobrushin_scale);
  if (doc.contains("label_coupling") && !doc["label_coupling"].is_null()) {
    LabelCouplingSpec lc;
    lc.scale = doc["label_coupling"].value("scale", lc.scale);
    lc.bias = doc["label_coupling"].value("bias", lc.bias);
    spec.label_coupling = lc;
  }
  spec.seed = doc.value("seed", spec.seed);
  spec.validate();
  return spec;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_json(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << doc.dump(2) << '\n';
}

void write_pgm(const std::string& path, const Matrix<double>& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
}

}  // namespace rbmlearn
