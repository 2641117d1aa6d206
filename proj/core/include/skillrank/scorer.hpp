#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillrank/seeding.hpp"

namespace skillrank {

enum class Activation { kRelu, kTanh };

std::string_view activation_name(Activation activation);
Activation parse_activation(std::string_view name);

// Fully connected scorer: input_dim -> hidden... -> 1. No hidden layers means
// the linear scorer w.x + b.
struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::kRelu;

  static Architecture linear(std::size_t input_dim) { return {input_dim, {}, {}}; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// The F1000-F512-F256-F128-F64-F1 ranking head, keeping only the hidden widths
// narrower than the input.
Architecture default_architecture(std::size_t input_dim);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;

  std::size_t size() const { return weights.size() + bias.size(); }
};

struct ScorerParams {
  Architecture arch;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  // Flat view: each layer's weights then its bias, layer by layer.
  double& at(std::size_t flat);
  double at(std::size_t flat) const;
};

struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const ScorerParams& params);

  std::size_t parameter_count() const;
  double& at(std::size_t flat);
  double at(std::size_t flat) const;
  Gradients& operator+=(const Gradients& other);
  void scale(double factor);
};

// Zero-initialized params of the given shape. Throws Error(kArchitecture) on a
// zero input dim or zero-width layer.
ScorerParams zero_params(const Architecture& arch);

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ScorerParams init_params(const Architecture& arch, std::uint64_t seed);

double score_snippet(const ScorerParams& params, std::span<const float> x);

using SnippetList = std::span<const std::span<const float>>;

// Mean of the snippet scores (the consensus over a clip's snippets).
double score_clip(const ScorerParams& params, SnippetList snippets);

// Cached forward pass of one snippet, consumed by backward().
struct SnippetTape {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each hidden layer
  std::vector<std::vector<double>> mask;    // dropout scale per hidden unit
  double score = 0.0;
};

struct ClipTape {
  double score = 0.0;
  std::vector<SnippetTape> snippets;
};

// Inverted dropout on hidden activations. Inactive when rate == 0 or rng is
// null.
struct DropoutConfig {
  double rate = 0.0;
  Rng* rng = nullptr;
};

ClipTape forward_clip(const ScorerParams& params, SnippetList snippets,
                      DropoutConfig dropout = {});

// Accumulates d(upstream * clip score)/d(params) into grads.
void backward(const ScorerParams& params, const ClipTape& tape, double upstream,
              Gradients& grads);

// Smallest |pre-activation| over rectified units in the tape; +inf when the
// scorer has no rectifier kinks.
double min_kink_distance(const ScorerParams& params, const ClipTape& tape);

// Returns the loss and, when grads is non-null, accumulates its analytic
// gradient there.
using LossClosure = std::function<double(const ScorerParams&, Gradients*)>;

// Worst coordinate-wise relative error |a - n| / max(|a|, |n|, 1e-3) between the
// analytic gradient a and the central difference n.
double gradient_check(const ScorerParams& params, const LossClosure& loss,
                      double step = 1e-5);

// Params file: "SKP1", u32 version, u32 header length, JSON header, u32 value
// count, little-endian f32 values.
struct ParamsFile {
  std::string header_json;
  std::vector<float> values;
};

inline constexpr std::uint32_t kParamsFormatVersion = 1;

std::vector<std::uint8_t> encode_params_file(const ParamsFile& file);
ParamsFile decode_params_file(std::span<const std::uint8_t> bytes);
ParamsFile read_params_file(const std::filesystem::path& path);
void write_params_file(const std::filesystem::path& path, const ParamsFile& file);

ParamsFile to_params_file(const ScorerParams& params);
ScorerParams from_params_file(const ParamsFile& file);
void save_params(const std::filesystem::path& path, const ScorerParams& params);
ScorerParams load_params(const std::filesystem::path& path);

}  // namespace skillrank
