#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evonudge/autodiff.hpp"
#include "evonudge/semgraph.hpp"

namespace evonudge {

inline constexpr int kTypeDim = 4;
inline constexpr int kBitDim = 32;
inline constexpr int kFeatureDim = kTypeDim + kNumOps + 2 * kBitDim;  // 79
inline constexpr int kHidden = 128;
inline constexpr int kHeads = 4;
inline constexpr int kHeadDim = kHidden / kHeads;
inline constexpr int kGatLayers = 3;
inline constexpr double kLeakySlope = 0.2;

// Single-precision bit pattern of `v`; NaN maps to all ones.
std::uint32_t value_bits(double v) noexcept;
// 32 entries in {0,1}, most significant bit first (sign, exponent, fraction).
void encode_bits(float v, std::span<double> out);
float decode_bits(std::span<const double> bits);

// Row layout: graph nodes in id order, then per candidate its tentative application node
// followed by its tentative value node. Messages flow src -> dst.
struct GraphInput {
  ad::Matrix features;        // rows x 79
  std::vector<int> src, dst;  // includes one self-loop per row
  std::vector<int> readout;   // tentative application rows, one per candidate
  int rows() const noexcept { return static_cast<int>(features.rows()); }
};

// Graph edges are symmetrized among existing nodes. Tentative nodes receive from their
// operation node and arguments and exchange with each other, but send nothing back into
// the graph, so a candidate's score never depends on which other candidates are scored.
GraphInput featurize(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                     const DataPoint& example);

struct GatLayer {
  ad::Matrix weight;   // 128 x 128
  ad::Matrix att_src;  // 4 x 32
  ad::Matrix att_dst;  // 4 x 32
  ad::Matrix bias;     // 1 x 128
};

struct ModelParams {
  ad::Matrix input_weight;  // 79 x 128
  ad::Matrix input_bias;    // 1 x 128
  std::array<GatLayer, kGatLayers> gat;
  ad::Matrix output_weight;  // 128 x 1
  ad::Matrix output_bias;    // 1 x 1

  // Glorot-uniform weights and zero biases.
  static ModelParams initialize(std::uint64_t seed);
  bool empty() const noexcept { return input_weight.size() == 0; }

  // Stable (name, tensor) order used for optimizer state and checkpoints.
  std::vector<std::pair<std::string, ad::Matrix*>> named();
  std::vector<std::pair<std::string, const ad::Matrix*>> named() const;
  bool operator==(const ModelParams& other) const;
};

std::string params_to_json(const ModelParams& params);
ModelParams params_from_json(std::string_view json);
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

// Parameters recorded on a tape, in ModelParams::named() order.
struct ParamVars {
  std::vector<ad::Var> vars;
};
ParamVars record_params(ad::Tape& tape, const ModelParams& params, bool requires_grad = true);

// Logits (readout x 1) recorded on the tape.
ad::Var forward_logits(ad::Tape& tape, const ParamVars& params, const GraphInput& input);

// Tape-free inference: raw logits, and sigmoid scores per readout row.
std::vector<double> forward_logits(const ModelParams& params, const GraphInput& input);
std::vector<double> forward(const ModelParams& params, const GraphInput& input);

// Mean of per-example forward passes.
std::vector<double> saliency(const ModelParams& params, const SearchGraph& graph,
                             std::span<const ApplicationCandidate> candidates, std::span<const DataPoint> dataset);

class GnnScorer : public CandidateScorer {
 public:
  explicit GnnScorer(const ModelParams& params);
  std::vector<double> score(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                            std::span<const DataPoint> dataset) const override;

 private:
  const ModelParams& params_;
};

// Throws std::invalid_argument when `params` is empty.
LibraryBuildResult build_library(const Problem& problem, const ModelParams& params, const LibraryBuildConfig& config,
                                 const Dsl& dsl = Dsl::standard());

}  // namespace evonudge
