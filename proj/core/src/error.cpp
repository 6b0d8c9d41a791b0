#include "vesta/error.hpp"

namespace vesta {

LayerError::LayerError(std::size_t layer_index, const std::string& layer_name,
                       const std::string& what)
    : Error("layer " + std::to_string(layer_index) + " (" + layer_name +
            "): " + what),
      layer_index_(layer_index),
      layer_name_(layer_name) {}

}  // namespace vesta
