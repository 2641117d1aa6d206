#include "skillrank/scorer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "json.hpp"
#include "skillrank/error.hpp"

namespace skillrank {

using json = nlohmann::json;

namespace {

constexpr std::uint8_t kParamsMagic[4] = {'S', 'K', 'P', '1'};

void check_dim(const ScorerParams& params, std::span<const float> x) {
  if (x.size() != params.arch.input_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "snippet has dim " + std::to_string(x.size()) +
                    ", scorer expects " + std::to_string(params.arch.input_dim));
  }
}

double activate(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the pre-activation; rectifier kink gets 0.
double activate_grad(Activation a, double z) {
  if (a == Activation::kRelu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

SnippetTape forward_snippet(const ScorerParams& params, std::span<const float> x,
                            DropoutConfig dropout) {
  check_dim(params, x);
  SnippetTape tape;
  std::vector<double> a(x.begin(), x.end());
  const bool drop = dropout.rate > 0.0 && dropout.rng != nullptr;
  std::bernoulli_distribution keep(1.0 - dropout.rate);

  const std::size_t hidden = params.layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    const auto& layer = params.layers[l];
    std::vector<double> z(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double acc = 0.0;
      for (std::size_t k = 0; k < layer.in; ++k) acc += w[k] * a[k];
      z[o] += acc;
    }
    std::vector<double> next(layer.out);
    std::vector<double> mask;
    if (drop) mask.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      next[o] = activate(params.arch.activation, z[o]);
      if (drop) {
        mask[o] = keep(*dropout.rng) ? 1.0 / (1.0 - dropout.rate) : 0.0;
        next[o] *= mask[o];
      }
    }
    tape.inputs.push_back(std::move(a));
    tape.pre.push_back(std::move(z));
    tape.mask.push_back(std::move(mask));
    a = std::move(next);
  }

  const auto& head = params.layers.back();
  double s = head.bias[0];
  for (std::size_t k = 0; k < head.in; ++k) s += head.weights[k] * a[k];
  tape.inputs.push_back(std::move(a));
  tape.score = s;
  return tape;
}

template <class Layers>
double& flat_ref(Layers& layers, std::size_t flat) {
  for (auto& layer : layers) {
    if (flat < layer.weights.size()) return layer.weights[flat];
    flat -= layer.weights.size();
    if (flat < layer.bias.size()) return layer.bias[flat];
    flat -= layer.bias.size();
  }
  throw Error(ErrorCode::kArchitecture, "flat parameter index out of range");
}

template <class Layers>
std::size_t flat_size(const Layers& layers) {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 |
         static_cast<std::uint32_t>(b[off + 3]) << 24;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

std::string_view activation_name(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorCode::kArchitecture,
              "unknown activation '" + std::string(name) + "'");
}

Architecture default_architecture(std::size_t input_dim) {
  Architecture arch{input_dim, {}, Activation::kRelu};
  for (std::size_t width : {1000, 512, 256, 128, 64}) {
    if (width < input_dim) arch.hidden.push_back(width);
  }
  return arch;
}

std::size_t ScorerParams::parameter_count() const { return flat_size(layers); }
double& ScorerParams::at(std::size_t flat) { return flat_ref(layers, flat); }
double ScorerParams::at(std::size_t flat) const {
  return flat_ref(const_cast<std::vector<DenseLayer>&>(layers), flat);
}

Gradients Gradients::zeros_like(const ScorerParams& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.layers.push_back({layer.in, layer.out,
                        std::vector<double>(layer.weights.size(), 0.0),
                        std::vector<double>(layer.bias.size(), 0.0)});
  }
  return g;
}

std::size_t Gradients::parameter_count() const { return flat_size(layers); }
double& Gradients::at(std::size_t flat) { return flat_ref(layers, flat); }
double Gradients::at(std::size_t flat) const {
  return flat_ref(const_cast<std::vector<DenseLayer>&>(layers), flat);
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size()) {
    throw Error(ErrorCode::kArchitecture, "gradient shapes differ");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& mine = layers[l];
    const auto& theirs = other.layers[l];
    if (mine.weights.size() != theirs.weights.size()) {
      throw Error(ErrorCode::kArchitecture, "gradient shapes differ");
    }
    for (std::size_t k = 0; k < mine.weights.size(); ++k) {
      mine.weights[k] += theirs.weights[k];
    }
    for (std::size_t k = 0; k < mine.bias.size(); ++k) mine.bias[k] += theirs.bias[k];
  }
  return *this;
}

void Gradients::scale(double factor) {
  for (auto& layer : layers) {
    for (auto& w : layer.weights) w *= factor;
    for (auto& b : layer.bias) b *= factor;
  }
}

ScorerParams zero_params(const Architecture& arch) {
  if (arch.input_dim == 0) {
    throw Error(ErrorCode::kArchitecture, "scorer input dim must be positive");
  }
  ScorerParams p;
  p.arch = arch;
  std::size_t in = arch.input_dim;
  auto widths = arch.hidden;
  widths.push_back(1);
  for (std::size_t out : widths) {
    if (out == 0) throw Error(ErrorCode::kArchitecture, "zero-width layer");
    p.layers.push_back({in, out, std::vector<double>(in * out, 0.0),
                        std::vector<double>(out, 0.0)});
    in = out;
  }
  return p;
}

ScorerParams init_params(const Architecture& arch, std::uint64_t seed) {
  ScorerParams p = zero_params(arch);
  Rng rng(seed);
  for (auto& layer : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : layer.weights) w = dist(rng);
  }
  return p;
}

double score_snippet(const ScorerParams& params, std::span<const float> x) {
  return forward_snippet(params, x, {}).score;
}

double score_clip(const ScorerParams& params, SnippetList snippets) {
  return forward_clip(params, snippets).score;
}

ClipTape forward_clip(const ScorerParams& params, SnippetList snippets,
                      DropoutConfig dropout) {
  if (snippets.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "clip has no snippets");
  }
  ClipTape tape;
  double sum = 0.0;
  for (const auto& x : snippets) {
    tape.snippets.push_back(forward_snippet(params, x, dropout));
    sum += tape.snippets.back().score;
  }
  tape.score = sum / static_cast<double>(snippets.size());
  return tape;
}

void backward(const ScorerParams& params, const ClipTape& tape, double upstream,
              Gradients& grads) {
  if (upstream == 0.0 || tape.snippets.empty()) return;
  const double per_snippet = upstream / static_cast<double>(tape.snippets.size());
  const std::size_t depth = params.layers.size();

  for (const auto& snip : tape.snippets) {
    // delta holds d(score)/d(output of layer l) scaled by per_snippet.
    std::vector<double> delta{per_snippet};
    for (std::size_t l = depth; l-- > 0;) {
      const auto& layer = params.layers[l];
      auto& g = grads.layers[l];
      const auto& in = snip.inputs[l];
      if (l + 1 < depth) {
        const auto& z = snip.pre[l];
        const auto& mask = snip.mask[l];
        for (std::size_t o = 0; o < layer.out; ++o) {
          delta[o] *= activate_grad(params.arch.activation, z[o]);
          if (!mask.empty()) delta[o] *= mask[o];
        }
      }
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (delta[o] == 0.0) continue;
        double* gw = g.weights.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) gw[k] += delta[o] * in[k];
        g.bias[o] += delta[o];
      }
      if (l == 0) break;
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (delta[o] == 0.0) continue;
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) prev[k] += w[k] * delta[o];
      }
      delta = std::move(prev);
    }
  }
}

double min_kink_distance(const ScorerParams& params, const ClipTape& tape) {
  double best = std::numeric_limits<double>::infinity();
  if (params.arch.activation != Activation::kRelu) return best;
  for (const auto& snip : tape.snippets) {
    for (const auto& z : snip.pre) {
      for (double v : z) best = std::min(best, std::abs(v));
    }
  }
  return best;
}

double gradient_check(const ScorerParams& params, const LossClosure& loss,
                      double step) {
  Gradients analytic = Gradients::zeros_like(params);
  loss(params, &analytic);
  ScorerParams probe = params;
  double worst = 0.0;
  for (std::size_t k = 0; k < probe.parameter_count(); ++k) {
    const double saved = probe.at(k);
    probe.at(k) = saved + step;
    const double up = loss(probe, nullptr);
    probe.at(k) = saved - step;
    const double down = loss(probe, nullptr);
    probe.at(k) = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.at(k);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

std::vector<std::uint8_t> encode_params_file(const ParamsFile& file) {
  std::vector<std::uint8_t> out(std::begin(kParamsMagic), std::end(kParamsMagic));
  put_u32(out, kParamsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(file.header_json.size()));
  out.insert(out.end(), file.header_json.begin(), file.header_json.end());
  put_u32(out, static_cast<std::uint32_t>(file.values.size()));
  for (float v : file.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ParamsFile decode_params_file(std::span<const std::uint8_t> bytes) {
  auto fail = [](const std::string& why) -> ParamsFile {
    throw Error(ErrorCode::kMalformedHeader, "params file: " + why);
  };
  if (bytes.size() < 12 ||
      !std::equal(std::begin(kParamsMagic), std::end(kParamsMagic), bytes.begin())) {
    return fail("bad magic");
  }
  if (read_u32(bytes, 4) != kParamsFormatVersion) return fail("unsupported version");
  const std::size_t header_len = read_u32(bytes, 8);
  if (bytes.size() < 12 + header_len + 4) return fail("truncated header");
  ParamsFile file;
  file.header_json.assign(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  const std::size_t count_at = 12 + header_len;
  const std::size_t count = read_u32(bytes, count_at);
  if (bytes.size() != count_at + 4 + count * 4) return fail("payload size mismatch");
  file.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    file.values[k] = std::bit_cast<float>(read_u32(bytes, count_at + 4 + 4 * k));
  }
  return file;
}

ParamsFile read_params_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_params_file(bytes);
}

void write_params_file(const std::filesystem::path& path, const ParamsFile& file) {
  const auto bytes = encode_params_file(file);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

ParamsFile to_params_file(const ScorerParams& params) {
  json header;
  header["kind"] = "mlp";
  header["input_dim"] = params.arch.input_dim;
  header["hidden"] = params.arch.hidden;
  header["activation"] = std::string(activation_name(params.arch.activation));
  ParamsFile file;
  file.header_json = header.dump();
  file.values.reserve(params.parameter_count());
  for (std::size_t k = 0; k < params.parameter_count(); ++k) {
    file.values.push_back(static_cast<float>(params.at(k)));
  }
  return file;
}

ScorerParams from_params_file(const ParamsFile& file) {
  Architecture arch;
  try {
    const json header = json::parse(file.header_json);
    if (header.at("kind").get<std::string>() != "mlp") {
      throw Error(ErrorCode::kArchitecture, "params file does not hold a scorer");
    }
    arch.input_dim = header.at("input_dim").get<std::size_t>();
    arch.hidden = header.at("hidden").get<std::vector<std::size_t>>();
    arch.activation = parse_activation(header.at("activation").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, std::string("params header: ") + e.what());
  }
  ScorerParams params = zero_params(arch);
  if (params.parameter_count() != file.values.size()) {
    throw Error(ErrorCode::kArchitecture,
                "params file value count does not match its architecture");
  }
  for (std::size_t k = 0; k < file.values.size(); ++k) {
    if (!std::isfinite(file.values[k])) {
      throw Error(ErrorCode::kNonFiniteValue, "non-finite parameter");
    }
    params.at(k) = file.values[k];
  }
  return params;
}

void save_params(const std::filesystem::path& path, const ScorerParams& params) {
  write_params_file(path, to_params_file(params));
}

ScorerParams load_params(const std::filesystem::path& path) {
  return from_params_file(read_params_file(path));
}

}  // namespace skillrank
