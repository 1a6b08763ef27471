#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "suvr/numeric.hpp"

namespace suvr {

enum class Activation { relu, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct Layer {
  Matrix weights;  // out x in
  Vec biases;      // out
  Activation activation = Activation::linear;
};

struct ForwardCache {
  Vec input;
  std::vector<Vec> pre_activations;  // z_l = W_l a_{l-1} + b_l
  std::vector<Vec> activations;      // a_l = act(z_l)
  double pre_norm = 0.0;             // ||u|| of the last activation
  Vec output;                        // v = u / ||u||
};

// Gradients with the same shapes as the encoder parameters.
struct ParamGrads {
  std::vector<Matrix> weights;
  std::vector<Vec> biases;

  void add(const ParamGrads& other);
  void scale(double factor);
};

// Feed-forward map from a raw feature vector to a unit-norm embedding: a
// stack of affine+activation layers with a final l2-normalization stage.
class MlpEncoder {
 public:
  MlpEncoder() = default;
  explicit MlpEncoder(std::vector<Layer> layers);

  // relu on hidden layers, linear output, weights ~ N(0, 1/fan_in),
  // biases 0.01.
  static MlpEncoder make(std::size_t input_dim, std::span<const std::size_t> hidden,
                         std::size_t output_dim, SeededRng& rng);

  std::size_t input_dim() const { return layers_.front().weights.cols(); }
  std::size_t output_dim() const { return layers_.back().weights.rows(); }
  const std::vector<Layer>& layers() const { return layers_; }

  // v is unit-norm; the cache feeds backward. Throws NormTooSmall when the
  // pre-normalization output underflows.
  ForwardCache forward(std::span<const double> x) const;

  // Gradients of a scalar loss given dL/dv; the normalization stage backprop
  // projects out the radial direction: dL/du = (dL/dv - v (v . dL/dv)) / ||u||.
  ParamGrads backward(const ForwardCache& cache, std::span<const double> dl_dv) const;

  ParamGrads zero_grads() const;

  // Mutable views over all parameter blocks (weights then biases, per layer);
  // same order as grad_views.
  std::vector<std::span<double>> parameter_views();
  std::vector<std::span<const double>> parameter_views() const;
  static std::vector<std::span<const double>> grad_views(const ParamGrads& grads);

 private:
  std::vector<Layer> layers_;
};

}  // namespace suvr
