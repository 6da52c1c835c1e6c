#pragma once

#include <string>

#include "nbrdf/nn/graph.hpp"

namespace nbrdf::nn {

// "NBWT" weights file: magic, version, architecture fingerprint, then each
// parameter tensor as shape + f32 little-endian data.
void save_weights(const std::string &path, const MlpGraph &graph, const Weights &w);

// Throws FormatError when the fingerprint does not match `graph`.
Weights load_weights(const std::string &path, const MlpGraph &graph);

// Fingerprint stored in a weights file, without shape checking.
uint64_t peek_fingerprint(const std::string &path);

} // namespace nbrdf::nn
