#include "lipreach/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lipreach/errors.hpp"

namespace lipreach {

using nlohmann::json;

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Identity: return "identity";
  }
  return "relu";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  if (name == "identity") return ActivationKind::Identity;
  throw ParseError("unknown activation '" + name + "'");
}

ActivationSector ActivationSector::for_kind(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return {kind, 0.0, 1.0};
    case ActivationKind::Tanh: return {kind, 0.0, 1.0};
    case ActivationKind::Sigmoid: return {kind, 0.0, 0.25};
    case ActivationKind::Identity: return {kind, 1.0, 1.0};
  }
  return {kind, 0.0, 1.0};
}

double activate(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::Identity: return x;
  }
  return x;
}

NeuralNetwork::NeuralNetwork(std::vector<Layer> layers, ActivationSector activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) {
    throw DimensionError("network needs at least one layer");
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.W.rows() == 0 || l.W.cols() == 0) {
      throw DimensionError("layer " + std::to_string(k) + " has an empty weight matrix");
    }
    if (l.b.size() != l.W.rows()) {
      throw DimensionError("layer " + std::to_string(k) + " bias length does not match rows");
    }
    if (!l.W.allFinite() || !l.b.allFinite()) {
      throw NonFiniteError("layer " + std::to_string(k) + " contains non-finite entries");
    }
    if (k > 0 && layers_[k - 1].W.rows() != l.W.cols()) {
      throw DimensionError("layer " + std::to_string(k) + " input size " +
                           std::to_string(l.W.cols()) + " does not match previous output " +
                           std::to_string(layers_[k - 1].W.rows()));
    }
  }
  if (!(activation_.alpha <= activation_.beta)) {
    throw DimensionError("activation sector requires alpha <= beta");
  }
}

int NeuralNetwork::hidden_neuron_count() const {
  int n = 0;
  for (int k = 0; k + 1 < static_cast<int>(layers_.size()); ++k) {
    n += static_cast<int>(layers_[k].W.rows());
  }
  return n;
}

std::vector<int> NeuralNetwork::arch() const {
  std::vector<int> a;
  a.push_back(input_dim());
  for (const Layer& l : layers_) a.push_back(static_cast<int>(l.W.rows()));
  return a;
}

Eigen::VectorXd NeuralNetwork::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) {
    throw DimensionError("forward: input size " + std::to_string(x.size()) +
                         " does not match network input " + std::to_string(input_dim()));
  }
  Eigen::VectorXd v = x;
  const int last = static_cast<int>(layers_.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    Eigen::VectorXd z = layers_[k].W * v + layers_[k].b;
    if (k < last) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activate(activation_.kind, z[i]);
    }
    v = std::move(z);
  }
  return v;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw ParseError(what + ": expected a list of rows");
  }
  const auto nr = rows.size();
  const auto nc = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t r = 0; r < nr; ++r) {
    if (!rows[r].is_array() || rows[r].size() != nc) {
      throw ParseError(what + ": ragged rows");
    }
    for (std::size_t c = 0; c < nc; ++c) {
      if (!rows[r][c].is_number()) throw ParseError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw ParseError(what + ": expected a list");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(what + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

NeuralNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weight file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("weight file '" + path + "': " + e.what());
  }
  for (const char* field : {"arch", "activation", "weights", "biases"}) {
    if (!doc.contains(field)) {
      throw ParseError("weight file '" + path + "' is missing field '" + field + "'");
    }
  }
  const ActivationKind kind = activation_from_string(doc["activation"].get<std::string>());
  const json& ws = doc["weights"];
  const json& bs = doc["biases"];
  if (!ws.is_array() || !bs.is_array() || ws.size() != bs.size() || ws.empty()) {
    throw ParseError("weight file '" + path + "': weights/biases must be equal-length lists");
  }
  std::vector<Layer> layers;
  layers.reserve(ws.size());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    Layer l;
    l.W = matrix_from_json(ws[k], "weights[" + std::to_string(k) + "]");
    l.b = vector_from_json(bs[k], "biases[" + std::to_string(k) + "]");
    layers.push_back(std::move(l));
  }
  const json& arch = doc["arch"];
  if (!arch.is_array() || arch.size() != layers.size() + 1) {
    throw ParseError("weight file '" + path + "': arch length must be layers + 1");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (arch[k].get<int>() != layers[k].W.cols() || arch[k + 1].get<int>() != layers[k].W.rows()) {
      throw DimensionError("weight file '" + path + "': arch does not match layer " +
                           std::to_string(k) + " shape");
    }
  }
  return NeuralNetwork(std::move(layers), ActivationSector::for_kind(kind));
}

void save_network(const NeuralNetwork& net, const std::string& path) {
  json doc;
  doc["schema_version"] = 1;
  json arch = json::array();
  for (int n : net.arch()) arch.push_back(n);
  doc["arch"] = std::move(arch);
  doc["activation"] = to_string(net.activation().kind);
  json ws = json::array();
  json bs = json::array();
  for (const Layer& l : net.layers()) {
    ws.push_back(matrix_to_json(l.W));
    bs.push_back(vector_to_json(l.b));
  }
  doc["weights"] = std::move(ws);
  doc["biases"] = std::move(bs);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write weight file '" + path + "'");
  out << doc.dump(1) << "\n";
}

ObjectiveFunction::ObjectiveFunction(NeuralNetwork net, Eigen::VectorXd c)
    : network(std::move(net)),
      direction(std::move(c)),
      rotation(Eigen::MatrixXd::Identity(network.input_dim(), network.input_dim())) {
  if (direction.size() != network.output_dim()) {
    throw DimensionError("open-loop direction must match network output dimension");
  }
  if (!direction.allFinite()) throw NonFiniteError("direction must be finite");
}

ObjectiveFunction::ObjectiveFunction(NeuralNetwork net, Eigen::VectorXd c, Eigen::MatrixXd A,
                                     Eigen::MatrixXd B, Eigen::MatrixXd R)
    : network(std::move(net)),
      direction(std::move(c)),
      state_matrix(std::move(A)),
      input_matrix(std::move(B)),
      rotation(std::move(R)) {
  const Eigen::MatrixXd& Am = *state_matrix;
  const Eigen::MatrixXd& Bm = *input_matrix;
  if (Am.rows() != Am.cols()) throw DimensionError("state matrix must be square");
  if (Bm.rows() != Am.rows()) throw DimensionError("input matrix rows must match state dimension");
  if (Bm.cols() != network.output_dim()) {
    throw DimensionError("input matrix columns must match network output dimension");
  }
  if (rotation.rows() != Am.rows() || rotation.cols() != Am.rows()) {
    throw DimensionError("rotation must be square in the state dimension");
  }
  if (network.input_dim() != Am.rows()) {
    throw DimensionError("network input must match state dimension for closed-loop objectives");
  }
  if (direction.size() != Am.rows()) {
    throw DimensionError("closed-loop direction must match state dimension");
  }
  if (!direction.allFinite() || !Am.allFinite() || !Bm.allFinite() || !rotation.allFinite()) {
    throw NonFiniteError("objective data must be finite");
  }
  const Eigen::MatrixXd gram = rotation.transpose() * rotation;
  if ((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-8) {
    throw DimensionError("rotation must be orthonormal");
  }
}

double objective_eval(const ObjectiveFunction& obj, const Eigen::VectorXd& y) {
  if (obj.closed_loop()) {
    const Eigen::VectorXd x = obj.rotation * y;
    return obj.direction.dot(*obj.state_matrix * x + *obj.input_matrix * obj.network.forward(x));
  }
  return obj.direction.dot(obj.network.forward(y));
}

}  // namespace lipreach
