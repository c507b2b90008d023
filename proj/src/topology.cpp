#include "hiroute/topology.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hiroute {

Topology::Topology(std::vector<std::vector<NodeId>> layers,
                   std::vector<double> memory_budget,
                   std::vector<double> resource_budget, double tau)
    : layers_(std::move(layers)),
      memory_(std::move(memory_budget)),
      resource_(std::move(resource_budget)),
      tau_(tau) {
  if (layers_.size() < 2) {
    throw std::invalid_argument("topology needs at least 2 layers");
  }
  if (!(tau_ > 0.0) || !std::isfinite(tau_)) {
    throw std::invalid_argument("slot duration tau must be positive");
  }
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    if (layer.empty()) throw std::invalid_argument("topology layer is empty");
    total += layer.size();
  }
  layer_of_.assign(total, 0);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    for (NodeId n : layers_[k]) {
      if (n < 0 || static_cast<std::size_t>(n) >= total) {
        throw std::invalid_argument("node id " + std::to_string(n) +
                                    " out of range");
      }
      if (layer_of_[n] != 0) {
        throw std::invalid_argument("node id " + std::to_string(n) +
                                    " assigned to more than one layer");
      }
      layer_of_[n] = static_cast<int>(k) + 1;
    }
  }
  if (memory_.size() != total || resource_.size() != total) {
    throw std::invalid_argument("budget vectors must cover every node");
  }
  const int K = num_layers();
  for (std::size_t n = 0; n < total; ++n) {
    const int layer = layer_of_[n];
    if (layer < K) {
      if (!(memory_[n] > 0.0)) {
        throw std::invalid_argument("memory budget of node " +
                                    std::to_string(n) + " must be positive");
      }
    } else {
      memory_[n] = kUnbounded;
    }
    if (layer > 1) {
      if (!(resource_[n] > 0.0) || !std::isfinite(resource_[n])) {
        throw std::invalid_argument("resource budget of node " +
                                    std::to_string(n) + " must be positive");
      }
    }
  }
}

void Topology::check_ref(NodeRef n) const {
  if (n.id < 0 || n.id >= num_nodes()) {
    throw std::out_of_range("unknown node " + std::to_string(n.id));
  }
  if (layer_of_[n.id] != n.layer) {
    throw std::invalid_argument("node " + std::to_string(n.id) +
                                " is not in layer " + std::to_string(n.layer));
  }
}

std::span<const NodeId> Topology::layer_nodes(int layer) const {
  if (layer < 1 || layer > num_layers()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " out of range");
  }
  return layers_[layer - 1];
}

int Topology::layer_of(NodeId n) const {
  if (n < 0 || n >= num_nodes()) {
    throw std::out_of_range("unknown node " + std::to_string(n));
  }
  return layer_of_[n];
}

std::span<const NodeId> Topology::uplinks(NodeRef n) const {
  check_ref(n);
  if (n.layer == num_layers()) {
    throw std::invalid_argument("oracle node " + std::to_string(n.id) +
                                " has no uplinks");
  }
  return layers_[n.layer];
}

double Topology::memory_budget(NodeId n) const { return memory_[ref(n).id]; }

double Topology::resource_budget(NodeId n) const {
  if (layer_of(n) == 1) {
    throw std::invalid_argument("entry node " + std::to_string(n) +
                                " has no resource budget");
  }
  return resource_[n];
}

Topology build_topology(std::span<const int> layer_sizes,
                        std::span<const double> memory_budgets,
                        double resource_budget, double tau) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("topology needs at least 2 layers");
  }
  if (memory_budgets.size() != layer_sizes.size()) {
    throw std::invalid_argument("need one memory budget per layer");
  }
  if (!(resource_budget > 0.0)) {
    throw std::invalid_argument("resource budget must be positive");
  }
  std::vector<std::vector<NodeId>> layers;
  std::vector<double> memory;
  std::vector<double> resource;
  NodeId next = 0;
  for (std::size_t k = 0; k < layer_sizes.size(); ++k) {
    if (layer_sizes[k] <= 0) {
      throw std::invalid_argument("layer " + std::to_string(k + 1) +
                                  " must have at least one node");
    }
    const bool oracle = k + 1 == layer_sizes.size();
    if (!oracle && !(memory_budgets[k] > 0.0)) {
      throw std::invalid_argument("memory budget of layer " +
                                  std::to_string(k + 1) + " must be positive");
    }
    auto& layer = layers.emplace_back();
    for (int i = 0; i < layer_sizes[k]; ++i) {
      layer.push_back(next++);
      memory.push_back(oracle ? kUnbounded : memory_budgets[k]);
      resource.push_back(k == 0 ? 0.0 : resource_budget);
    }
  }
  return Topology(std::move(layers), std::move(memory), std::move(resource),
                  tau);
}

}  // namespace hiroute
