#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "kasfc/errors.hpp"
#include "kasfc/relunet.hpp"

namespace kasfc {

/// Network file schema:
///
///   {
///     "architecture": [p_0, ..., p_{L+1}],
///     "layers": [{"weights": [[row], ...], "bias": [...], "activation": "relu" | "identity"}, ...],
///     "meta": {"d", "K", "p", "beta", "Q", "sup_norm", "r", "function", "builder_version"}
///   }
///
/// Numbers are written in shortest round-trip decimal form, so save/load is
/// bit-exact on binary64. An infinite Q (piecewise-constant tables) is null.
inline nlohmann::json to_json(const ReluNetwork& net) {
  using nlohmann::json;
  json j;
  j["architecture"] = net.architecture().widths;
  json layers = json::array();
  for (const auto& l : net.layers()) {
    json rows = json::array();
    for (std::size_t r = 0; r < l.outputs; ++r) {
      rows.push_back(std::vector<double>(l.weights.begin() + static_cast<std::ptrdiff_t>(r * l.inputs),
                                         l.weights.begin() + static_cast<std::ptrdiff_t>((r + 1) * l.inputs)));
    }
    layers.push_back({{"weights", std::move(rows)},
                      {"bias", l.bias},
                      {"activation", l.activation == Activation::Relu ? "relu" : "identity"}});
  }
  j["layers"] = std::move(layers);
  const NetworkMeta& m = net.meta();
  j["meta"] = {{"d", m.d},
               {"K", m.K},
               {"p", m.p},
               {"beta", m.beta},
               {"Q", std::isfinite(m.Q) ? json(m.Q) : json(nullptr)},
               {"sup_norm", m.sup_norm},
               {"r", m.r},
               {"function", m.function},
               {"builder_version", m.builder_version}};
  return j;
}

inline ReluNetwork network_from_json(const nlohmann::json& j) {
  try {
    const auto widths = j.at("architecture").get<std::vector<std::size_t>>();
    const auto& jl = j.at("layers");
    if (widths.size() != jl.size() + 1) throw ShapeError("network file: architecture does not match layer count");
    std::vector<Layer> layers;
    layers.reserve(jl.size());
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const auto& e = jl[i];
      const std::string act = e.at("activation").get<std::string>();
      if (act != "relu" && act != "identity") throw ShapeError("network file: unknown activation '" + act + "'");
      Layer l(widths[i], widths[i + 1], act == "relu" ? Activation::Relu : Activation::Identity);
      const auto& rows = e.at("weights");
      if (rows.size() != l.outputs) throw ShapeError("network file: weight row count mismatch in layer " + std::to_string(i));
      for (std::size_t r = 0; r < l.outputs; ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (row.size() != l.inputs) throw ShapeError("network file: weight column count mismatch in layer " + std::to_string(i));
        std::copy(row.begin(), row.end(), l.weights.begin() + static_cast<std::ptrdiff_t>(r * l.inputs));
      }
      l.bias = e.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(l));
    }
    NetworkMeta m;
    if (j.contains("meta")) {
      const auto& jm = j.at("meta");
      m.d = jm.value("d", std::size_t{0});
      m.K = jm.value("K", std::size_t{0});
      m.p = jm.value("p", 0.0);
      m.beta = jm.value("beta", 0.0);
      m.Q = jm.contains("Q") && !jm.at("Q").is_null() ? jm.at("Q").get<double>() : std::numeric_limits<double>::infinity();
      m.sup_norm = jm.value("sup_norm", 0.0);
      m.r = jm.value("r", 0);
      m.function = jm.value("function", std::string{});
      m.builder_version = jm.value("builder_version", std::string{});
    }
    return ReluNetwork(widths.front(), std::move(layers), std::move(m));
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("network file: ") + e.what());
  }
}

inline void save_network(const ReluNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << to_json(net).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline ReluNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError("network file '" + path + "': " + e.what());
  }
  return network_from_json(j);
}

}  // namespace kasfc
