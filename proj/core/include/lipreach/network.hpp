#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace lipreach {

enum class ActivationKind { ReLU, Tanh, Sigmoid, Identity };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

/// Slope bounds [alpha, beta] satisfied by an activation on all of R:
/// alpha <= (phi(a) - phi(b)) / (a - b) <= beta for all a != b.
struct ActivationSector {
  ActivationKind kind = ActivationKind::ReLU;
  double alpha = 0.0;
  double beta = 1.0;

  /// Default slope bounds: ReLU/tanh (0,1), sigmoid (0,0.25), identity (1,1).
  static ActivationSector for_kind(ActivationKind kind);
};

double activate(ActivationKind kind, double x);

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

/// Feed-forward network f(x) = W^L phi(W^{L-1} phi(... phi(W^0 x + b^0) ...) + b^{L-1}) + b^L.
/// The final layer is affine; phi is applied after every layer except the last.
/// Immutable after construction.
class NeuralNetwork {
 public:
  NeuralNetwork(std::vector<Layer> layers, ActivationSector activation);

  const std::vector<Layer>& layers() const { return layers_; }
  const ActivationSector& activation() const { return activation_; }

  int input_dim() const { return static_cast<int>(layers_.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().W.rows()); }

  /// Number of activation layers L (layers() has L+1 entries).
  int hidden_layer_count() const { return static_cast<int>(layers_.size()) - 1; }

  /// Total hidden neuron count N = n_1 + ... + n_L.
  int hidden_neuron_count() const;

  /// Layer sizes [n_0, n_1, ..., n_{L+1}].
  std::vector<int> arch() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

 private:
  std::vector<Layer> layers_;
  ActivationSector activation_;
};

/// Reads a network from a JSON weight file. Throws ParseError on malformed
/// content, DimensionError on inconsistent shapes, NonFiniteError on NaN/inf.
NeuralNetwork load_network(const std::string& path);

/// Writes a network as a JSON weight file with full double precision.
void save_network(const NeuralNetwork& net, const std::string& path);

/// Scalar objective over a box in y-coordinates.
/// Open loop (no dynamics):   J(y) = c . f(y), rotation must be identity.
/// Closed loop (A, B given):  J(y) = c . (A R y + B f(R y)).
struct ObjectiveFunction {
  NeuralNetwork network;
  Eigen::VectorXd direction;                    // c
  std::optional<Eigen::MatrixXd> state_matrix;  // A (n_x by n_x)
  std::optional<Eigen::MatrixXd> input_matrix;  // B (n_x by n_f)
  Eigen::MatrixXd rotation;                     // R (orthonormal; identity if unused)

  ObjectiveFunction(NeuralNetwork net, Eigen::VectorXd c);
  ObjectiveFunction(NeuralNetwork net, Eigen::VectorXd c, Eigen::MatrixXd A,
                    Eigen::MatrixXd B, Eigen::MatrixXd R);

  bool closed_loop() const { return state_matrix.has_value(); }

  /// Dimension of the optimization variable y.
  int input_dim() const { return static_cast<int>(rotation.cols()); }

  double operator()(const Eigen::VectorXd& y) const { return objective_eval(*this, y); }

  friend double objective_eval(const ObjectiveFunction& obj, const Eigen::VectorXd& y);
};

double objective_eval(const ObjectiveFunction& obj, const Eigen::VectorXd& y);

}  // namespace lipreach
