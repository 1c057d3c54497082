#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcdse/resources.hpp"

namespace mcdse {

enum class LayerKind { Conv, Pool, Nonlin };

const char* layer_kind_name(LayerKind k);

// One layer of a linear-chain network. Spatial sizes are output-side;
// the input height/width of a layer is taken from its predecessor
// (stride-scaled for the first layer of the chain).
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int n_in = 0;    // input feature maps
  int n_out = 0;   // output feature maps
  int k = 1;       // window size (k x k)
  int stride = 1;
  int h_out = 0;
  int w_out = 0;

  std::uint64_t weight_count() const;  // n_in*n_out*k^2 for Conv, else 0
  std::uint64_t macs() const;          // multiply-accumulates per input frame
  std::uint64_t work_ops() const;      // arithmetic ops per input frame, 2 per MAC
  std::uint64_t out_elements() const { return std::uint64_t(n_out) * h_out * w_out; }
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::optional<double> fps_target;  // frames/s the deployment asks for

  std::uint64_t total_ops() const;
};

struct PlatformSpec {
  ResourceVector rsc_avail;
  double b_mem_bytes_per_s = 0.0;  // external memory bandwidth budget
  double clock_hz = 0.0;
  int port_width_bits = 64;   // memory port width
  int wordlength_bits = 16;   // fixed-point element width
  int burst_length = 1024;    // beats per burst transaction
  int stage_latency_cycles = 16;  // fixed pipeline register cost per stage
  ResourceCostModel cost_model;

  int pack_factor() const { return port_width_bits / wordlength_bits; }
  double word_bytes() const { return wordlength_bits / 8.0; }
  double port_bytes_per_cycle() const { return port_width_bits / 8.0; }
};

// A split of the layer chain into consecutive subgraphs plus the input-fold
// choice for every Conv layer. cut_points holds chain indices (0, n_layers)
// where a new subgraph begins; input_folds is indexed by Conv layer in chain
// order and each entry divides that layer's n_in.
struct Partitioning {
  std::vector<int> cut_points;
  std::vector<int> input_folds;

  int subgraph_count() const { return static_cast<int>(cut_points.size()) + 1; }
  // [first_layer, last_layer] inclusive for subgraph idx.
  std::pair<int, int> subgraph_range(const NetworkSpec& net, int idx) const;
};

NetworkSpec parse_network(const std::string& text);
std::string serialize_network(const NetworkSpec& net);
PlatformSpec parse_platform(const std::string& text);
std::string serialize_platform(const PlatformSpec& p);

void validate_network(const NetworkSpec& net);
void validate_platform(const PlatformSpec& p);
void validate_partitioning(const NetworkSpec& net, const Partitioning& part);

// All admissible partitionings with at most max_subgraphs subgraphs. Every
// subgraph keeps at least one Conv layer and folds range over the divisors
// of each Conv layer's n_in. Deterministic order.
std::vector<Partitioning> enumerate_partitionings(const NetworkSpec& net, int max_subgraphs = 8);

std::vector<int> divisors_of(int n);

}  // namespace mcdse
