#include "suvr/encoder.hpp"

#include <cmath>
#include <string>

#include "suvr/errors.hpp"

namespace suvr {

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw ConfigError("activation: expected relu|linear, got '" + name + "'");
}

void ParamGrads::add(const ParamGrads& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    double* w = weights[l].data();
    const double* ow = other.weights[l].data();
    for (std::size_t i = 0; i < weights[l].rows() * weights[l].cols(); ++i) w[i] += ow[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void ParamGrads::scale(double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    double* w = weights[l].data();
    for (std::size_t i = 0; i < weights[l].rows() * weights[l].cols(); ++i) w[i] *= factor;
    for (double& b : biases[l]) b *= factor;
  }
}

MlpEncoder::MlpEncoder(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("MlpEncoder: at least one layer required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.weights.rows() != layer.biases.size()) {
      throw DimensionMismatch("MlpEncoder: layer " + std::to_string(l) +
                              " weight rows vs bias length");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw DimensionMismatch("MlpEncoder: layer " + std::to_string(l) +
                              " input dim does not chain");
    }
  }
}

MlpEncoder MlpEncoder::make(std::size_t input_dim, std::span<const std::size_t> hidden,
                            std::size_t output_dim, SeededRng& rng) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t fan_in = dims[l];
    std::size_t fan_out = dims[l + 1];
    Layer layer;
    layer.weights = Matrix(fan_out, fan_in);
    double std_dev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t r = 0; r < fan_out; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = std_dev * rng.next_normal();
      }
    }
    layer.biases = Vec(fan_out, 0.01);
    layer.activation = (l + 2 < dims.size()) ? Activation::relu : Activation::linear;
    layers.push_back(std::move(layer));
  }
  return MlpEncoder(std::move(layers));
}

ForwardCache MlpEncoder::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw DimensionMismatch("forward: input length " + std::to_string(x.size()) +
                            " vs encoder input dim " + std::to_string(input_dim()));
  }
  ForwardCache cache;
  cache.input.assign(x.begin(), x.end());
  const Vec* prev = &cache.input;
  for (const Layer& layer : layers_) {
    Vec z(layer.weights.rows());
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      double acc = layer.biases[r];
      auto w = layer.weights.row(r);
      for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * (*prev)[c];
      z[r] = acc;
    }
    Vec a = z;
    if (layer.activation == Activation::relu) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
    cache.pre_activations.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
    prev = &cache.activations.back();
  }
  const Vec& u = cache.activations.back();
  cache.pre_norm = norm2(u);
  if (cache.pre_norm < kNormFloor) {
    throw NormTooSmall("forward: pre-normalization output norm " +
                       std::to_string(cache.pre_norm) + " underflows");
  }
  cache.output.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) cache.output[i] = u[i] / cache.pre_norm;
  return cache;
}

ParamGrads MlpEncoder::backward(const ForwardCache& cache,
                                std::span<const double> dl_dv) const {
  if (cache.activations.size() != layers_.size() ||
      dl_dv.size() != output_dim()) {
    throw DimensionMismatch("backward: cache does not match this encoder");
  }
  ParamGrads grads = zero_grads();

  // Through v = u / ||u||: project out the radial component.
  const Vec& v = cache.output;
  double radial = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) radial += v[i] * dl_dv[i];
  Vec da(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    da[i] = (dl_dv[i] - v[i] * radial) / cache.pre_norm;
  }

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const Vec& z = cache.pre_activations[l];
    Vec dz = std::move(da);
    if (layer.activation == Activation::relu) {
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (z[i] <= 0.0) dz[i] = 0.0;
      }
    }
    const Vec& a_prev = (l == 0) ? cache.input : cache.activations[l - 1];
    Matrix& dw = grads.weights[l];
    for (std::size_t r = 0; r < dw.rows(); ++r) {
      for (std::size_t c = 0; c < dw.cols(); ++c) dw(r, c) = dz[r] * a_prev[c];
      grads.biases[l][r] = dz[r];
    }
    if (l > 0) {
      da.assign(a_prev.size(), 0.0);
      for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
        auto w = layer.weights.row(r);
        for (std::size_t c = 0; c < w.size(); ++c) da[c] += w[c] * dz[r];
      }
    }
  }
  return grads;
}

ParamGrads MlpEncoder::zero_grads() const {
  ParamGrads grads;
  for (const Layer& layer : layers_) {
    grads.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    grads.biases.emplace_back(layer.biases.size(), 0.0);
  }
  return grads;
}

std::vector<std::span<double>> MlpEncoder::parameter_views() {
  std::vector<std::span<double>> views;
  for (Layer& layer : layers_) {
    views.emplace_back(layer.weights.data(), layer.weights.rows() * layer.weights.cols());
    views.emplace_back(layer.biases.data(), layer.biases.size());
  }
  return views;
}

std::vector<std::span<const double>> MlpEncoder::parameter_views() const {
  std::vector<std::span<const double>> views;
  for (const Layer& layer : layers_) {
    views.emplace_back(layer.weights.data(), layer.weights.rows() * layer.weights.cols());
    views.emplace_back(layer.biases.data(), layer.biases.size());
  }
  return views;
}

std::vector<std::span<const double>> MlpEncoder::grad_views(const ParamGrads& grads) {
  std::vector<std::span<const double>> views;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    views.emplace_back(grads.weights[l].data(),
                       grads.weights[l].rows() * grads.weights[l].cols());
    views.emplace_back(grads.biases[l].data(), grads.biases[l].size());
  }
  return views;
}

}  // namespace suvr
