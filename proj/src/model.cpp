#include "mcdse/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "mcdse/errors.hpp"

namespace mcdse {

using json = nlohmann::ordered_json;

namespace {

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": malformed document at line " +
                     std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError(where + ": unknown key '" + it.key() + "'");
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

int require_int(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_number_integer())
    throw ParseError(where + ": key '" + key + "' must be an integer");
  return v.get<int>();
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_number()) throw ParseError(where + ": key '" + key + "' must be a number");
  return v.get<double>();
}

LayerKind kind_from_string(const std::string& s, const std::string& where) {
  if (s == "Conv") return LayerKind::Conv;
  if (s == "Pool") return LayerKind::Pool;
  if (s == "Nonlin") return LayerKind::Nonlin;
  throw ParseError(where + ": key 'kind' must be one of Conv, Pool, Nonlin (got '" + s + "')");
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::Pool: return "Pool";
    default: return "Nonlin";
  }
}

std::uint64_t LayerSpec::weight_count() const {
  if (kind != LayerKind::Conv) return 0;
  return std::uint64_t(n_in) * n_out * k * k;
}

std::uint64_t LayerSpec::macs() const {
  std::uint64_t window = std::uint64_t(k) * k * h_out * w_out;
  switch (kind) {
    case LayerKind::Conv: return std::uint64_t(n_in) * n_out * window;
    case LayerKind::Pool: return std::uint64_t(n_out) * window;
    default: return out_elements();
  }
}

std::uint64_t LayerSpec::work_ops() const {
  // Two arithmetic ops per multiply-accumulate; window and pointwise stages
  // count one op per element visit.
  return kind == LayerKind::Conv ? 2 * macs() : macs();
}

std::uint64_t NetworkSpec::total_ops() const {
  std::uint64_t total = 0;
  for (const auto& l : layers) total += l.work_ops();
  return total;
}

std::pair<int, int> Partitioning::subgraph_range(const NetworkSpec& net, int idx) const {
  int first = idx == 0 ? 0 : cut_points[idx - 1];
  int last = idx == subgraph_count() - 1 ? static_cast<int>(net.layers.size()) - 1
                                         : cut_points[idx] - 1;
  return {first, last};
}

NetworkSpec parse_network(const std::string& text) {
  json doc = parse_document(text, "network");
  if (!doc.is_object()) throw ParseError("network: document must be an object");
  reject_unknown_keys(doc, {"name", "fps_target", "layers"}, "network");

  NetworkSpec net;
  const json& name = require_key(doc, "name", "network");
  if (!name.is_string()) throw ParseError("network: key 'name' must be a string");
  net.name = name.get<std::string>();

  if (auto it = doc.find("fps_target"); it != doc.end()) {
    if (!it->is_number()) throw ParseError("network: key 'fps_target' must be a number");
    net.fps_target = it->get<double>();
  }

  const json& layers = require_key(doc, "layers", "network");
  if (!layers.is_array()) throw ParseError("network: key 'layers' must be an array");

  int idx = 0;
  for (const json& jl : layers) {
    std::string where = "layer " + std::to_string(idx + 1);
    if (!jl.is_object()) throw ParseError(where + ": must be an object");
    reject_unknown_keys(jl, {"kind", "n_in", "n_out", "k", "stride", "h_out", "w_out"}, where);
    const json& kind = require_key(jl, "kind", where);
    if (!kind.is_string()) throw ParseError(where + ": key 'kind' must be a string");

    LayerSpec l;
    l.kind = kind_from_string(kind.get<std::string>(), where);
    l.n_in = require_int(jl, "n_in", where);
    l.n_out = require_int(jl, "n_out", where);
    l.k = require_int(jl, "k", where);
    l.stride = require_int(jl, "stride", where);
    l.h_out = require_int(jl, "h_out", where);
    l.w_out = require_int(jl, "w_out", where);
    net.layers.push_back(l);
    ++idx;
  }

  validate_network(net);
  return net;
}

std::string serialize_network(const NetworkSpec& net) {
  json doc;
  doc["name"] = net.name;
  if (net.fps_target) doc["fps_target"] = *net.fps_target;
  doc["layers"] = json::array();
  for (const auto& l : net.layers) {
    json jl;
    jl["kind"] = layer_kind_name(l.kind);
    jl["n_in"] = l.n_in;
    jl["n_out"] = l.n_out;
    jl["k"] = l.k;
    jl["stride"] = l.stride;
    jl["h_out"] = l.h_out;
    jl["w_out"] = l.w_out;
    doc["layers"].push_back(jl);
  }
  return doc.dump(2) + "\n";
}

void validate_network(const NetworkSpec& net) {
  if (net.name.empty()) throw ValidationError("network: name must not be empty");
  if (net.layers.empty())
    throw ValidationError("network '" + net.name + "': at least one Conv layer required");

  bool has_conv = false;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    std::string where = "network '" + net.name + "' layer " + std::to_string(i + 1);
    if (l.n_in < 1 || l.n_out < 1) throw ValidationError(where + ": n_in and n_out must be >= 1");
    if (l.k < 1) throw ValidationError(where + ": k must be >= 1");
    if (l.stride < 1) throw ValidationError(where + ": stride must be >= 1");
    if (l.h_out < 1 || l.w_out < 1)
      throw ValidationError(where + ": h_out and w_out must be >= 1");
    if (l.kind == LayerKind::Nonlin) {
      if (l.k != 1) throw ValidationError(where + ": Nonlin requires k = 1");
      if (l.n_out != l.n_in) throw ValidationError(where + ": Nonlin requires n_out = n_in");
    }
    if (l.kind == LayerKind::Conv) has_conv = true;
    if (i > 0 && net.layers[i - 1].n_out != l.n_in)
      throw ValidationError("network '" + net.name + "': layer " + std::to_string(i + 1) +
                            " n_in=" + std::to_string(l.n_in) + " does not match layer " +
                            std::to_string(i) + " n_out=" + std::to_string(net.layers[i - 1].n_out));
  }
  if (!has_conv)
    throw ValidationError("network '" + net.name + "': at least one Conv layer required");
}

PlatformSpec parse_platform(const std::string& text) {
  json doc = parse_document(text, "platform");
  if (!doc.is_object()) throw ParseError("platform: document must be an object");
  reject_unknown_keys(doc,
                      {"lut", "ff", "dsp", "bram", "b_mem_bytes_per_s", "clock_hz",
                       "port_width_bits", "wordlength_bits", "burst_length",
                       "stage_latency_cycles", "cost_model"},
                      "platform");

  PlatformSpec p;
  p.rsc_avail.lut = require_int(doc, "lut", "platform");
  p.rsc_avail.ff = require_int(doc, "ff", "platform");
  p.rsc_avail.dsp = require_int(doc, "dsp", "platform");
  p.rsc_avail.bram = require_int(doc, "bram", "platform");
  p.b_mem_bytes_per_s = require_number(doc, "b_mem_bytes_per_s", "platform");
  p.clock_hz = require_number(doc, "clock_hz", "platform");
  p.port_width_bits = require_int(doc, "port_width_bits", "platform");
  p.wordlength_bits = require_int(doc, "wordlength_bits", "platform");
  p.burst_length = require_int(doc, "burst_length", "platform");
  if (auto it = doc.find("stage_latency_cycles"); it != doc.end()) {
    if (!it->is_number_integer())
      throw ParseError("platform: key 'stage_latency_cycles' must be an integer");
    p.stage_latency_cycles = it->get<int>();
  }

  const json& cm = require_key(doc, "cost_model", "platform");
  if (!cm.is_object()) throw ParseError("platform: key 'cost_model' must be an object");
  reject_unknown_keys(
      cm, {"dsp_per_mult", "lut_per_pe", "ff_per_pe", "lut_base", "ff_base", "bram_bytes"},
      "platform cost_model");
  p.cost_model.dsp_per_mult = require_number(cm, "dsp_per_mult", "platform cost_model");
  p.cost_model.lut_per_pe = require_number(cm, "lut_per_pe", "platform cost_model");
  p.cost_model.ff_per_pe = require_number(cm, "ff_per_pe", "platform cost_model");
  p.cost_model.lut_base = require_number(cm, "lut_base", "platform cost_model");
  p.cost_model.ff_base = require_number(cm, "ff_base", "platform cost_model");
  p.cost_model.bram_bytes = require_number(cm, "bram_bytes", "platform cost_model");
  p.cost_model.word_bytes = p.wordlength_bits / 8.0;

  validate_platform(p);
  return p;
}

std::string serialize_platform(const PlatformSpec& p) {
  json doc;
  doc["lut"] = p.rsc_avail.lut;
  doc["ff"] = p.rsc_avail.ff;
  doc["dsp"] = p.rsc_avail.dsp;
  doc["bram"] = p.rsc_avail.bram;
  doc["b_mem_bytes_per_s"] = p.b_mem_bytes_per_s;
  doc["clock_hz"] = p.clock_hz;
  doc["port_width_bits"] = p.port_width_bits;
  doc["wordlength_bits"] = p.wordlength_bits;
  doc["burst_length"] = p.burst_length;
  doc["stage_latency_cycles"] = p.stage_latency_cycles;
  json cm;
  cm["dsp_per_mult"] = p.cost_model.dsp_per_mult;
  cm["lut_per_pe"] = p.cost_model.lut_per_pe;
  cm["ff_per_pe"] = p.cost_model.ff_per_pe;
  cm["lut_base"] = p.cost_model.lut_base;
  cm["ff_base"] = p.cost_model.ff_base;
  cm["bram_bytes"] = p.cost_model.bram_bytes;
  doc["cost_model"] = cm;
  return doc.dump(2) + "\n";
}

void validate_platform(const PlatformSpec& p) {
  if (p.rsc_avail.lut < 0 || p.rsc_avail.ff < 0 || p.rsc_avail.dsp < 0 || p.rsc_avail.bram < 0)
    throw ValidationError("platform: resource budgets must be non-negative");
  if (p.b_mem_bytes_per_s <= 0) throw ValidationError("platform: b_mem_bytes_per_s must be > 0");
  if (p.clock_hz <= 0) throw ValidationError("platform: clock_hz must be > 0");
  if (p.wordlength_bits <= 0 || p.port_width_bits <= 0)
    throw ValidationError("platform: port_width_bits and wordlength_bits must be > 0");
  if (p.wordlength_bits % 8 != 0)
    throw ValidationError("platform: wordlength_bits must be a multiple of 8");
  if (p.port_width_bits % p.wordlength_bits != 0)
    throw ValidationError("platform: port_width_bits must be a multiple of wordlength_bits");
  if (p.burst_length < 1) throw ValidationError("platform: burst_length must be >= 1");
  if (p.stage_latency_cycles < 0)
    throw ValidationError("platform: stage_latency_cycles must be >= 0");
  if (p.cost_model.bram_bytes <= 0)
    throw ValidationError("platform cost_model: bram_bytes must be > 0");
}

void validate_partitioning(const NetworkSpec& net, const Partitioning& part) {
  int n_layers = static_cast<int>(net.layers.size());
  int prev = 0;
  for (int cut : part.cut_points) {
    if (cut <= prev || cut >= n_layers)
      throw ValidationError("partitioning: cut points must be strictly increasing inside (0, " +
                            std::to_string(n_layers) + ")");
    prev = cut;
  }

  std::size_t conv_count = 0;
  for (const auto& l : net.layers)
    if (l.kind == LayerKind::Conv) ++conv_count;
  if (part.input_folds.size() != conv_count)
    throw ValidationError("partitioning: expected one input fold per Conv layer (" +
                          std::to_string(conv_count) + ", got " +
                          std::to_string(part.input_folds.size()) + ")");

  std::size_t fold_idx = 0;
  for (int i = 0; i < n_layers; ++i) {
    if (net.layers[i].kind != LayerKind::Conv) continue;
    int f = part.input_folds[fold_idx++];
    if (f < 1 || f > net.layers[i].n_in || net.layers[i].n_in % f != 0)
      throw ValidationError("partitioning: input fold " + std::to_string(f) + " for layer " +
                            std::to_string(i + 1) + " must divide n_in=" +
                            std::to_string(net.layers[i].n_in));
  }

  for (int s = 0; s < part.subgraph_count(); ++s) {
    auto [first, last] = part.subgraph_range(net, s);
    bool has_conv = false;
    for (int i = first; i <= last; ++i)
      if (net.layers[i].kind == LayerKind::Conv) has_conv = true;
    if (!has_conv)
      throw ValidationError("partitioning: subgraph " + std::to_string(s) +
                            " contains no Conv layer");
  }
}

std::vector<int> divisors_of(int n) {
  std::vector<int> divs;
  for (int d = 1; d * d <= n; ++d) {
    if (n % d != 0) continue;
    divs.push_back(d);
    if (d != n / d) divs.push_back(n / d);
  }
  std::sort(divs.begin(), divs.end());
  return divs;
}

std::vector<Partitioning> enumerate_partitionings(const NetworkSpec& net, int max_subgraphs) {
  validate_network(net);
  if (max_subgraphs < 1) throw ValidationError("enumerate_partitionings: max_subgraphs must be >= 1");

  int n_layers = static_cast<int>(net.layers.size());
  std::vector<int> conv_layers;
  for (int i = 0; i < n_layers; ++i)
    if (net.layers[i].kind == LayerKind::Conv) conv_layers.push_back(i);

  // Admissible cut sets first: subsets of the interior boundaries that keep a
  // Conv layer in every range and stay within the subgraph budget.
  std::vector<std::vector<int>> cut_sets;
  int boundaries = n_layers - 1;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << boundaries); ++mask) {
    std::vector<int> cuts;
    for (int b = 0; b < boundaries; ++b)
      if (mask & (std::uint64_t(1) << b)) cuts.push_back(b + 1);
    if (static_cast<int>(cuts.size()) + 1 > max_subgraphs) continue;

    bool ok = true;
    int first = 0;
    auto range_has_conv = [&](int lo, int hi) {
      for (int i = lo; i <= hi; ++i)
        if (net.layers[i].kind == LayerKind::Conv) return true;
      return false;
    };
    for (std::size_t c = 0; c <= cuts.size() && ok; ++c) {
      int last = c < cuts.size() ? cuts[c] - 1 : n_layers - 1;
      ok = range_has_conv(first, last);
      first = last + 1;
    }
    if (ok) cut_sets.push_back(std::move(cuts));
  }

  // Then the fold lattice: divisors of n_in per Conv layer, odometer order.
  std::vector<std::vector<int>> fold_choices;
  for (int li : conv_layers) fold_choices.push_back(divisors_of(net.layers[li].n_in));

  std::vector<Partitioning> out;
  for (const auto& cuts : cut_sets) {
    std::vector<std::size_t> pick(fold_choices.size(), 0);
    while (true) {
      Partitioning part;
      part.cut_points = cuts;
      for (std::size_t i = 0; i < pick.size(); ++i)
        part.input_folds.push_back(fold_choices[i][pick[i]]);
      out.push_back(std::move(part));

      std::size_t i = 0;
      for (; i < pick.size(); ++i) {
        if (++pick[i] < fold_choices[i].size()) break;
        pick[i] = 0;
      }
      if (i == pick.size()) break;
    }
  }
  return out;
}

}  // namespace mcdse
