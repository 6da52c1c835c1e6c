#pragma once

#include <stdexcept>
#include <string>

namespace nbrdf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateHalfVector : Error { using Error::Error; };
struct InvalidDirection : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct ChannelMismatch : Error { using Error::Error; };
struct WeightSumError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };
struct NonFiniteTarget : Error { using Error::Error; };
struct MixedDecoderError : Error { using Error::Error; };
struct AllZeroGndf : Error { using Error::Error; };
struct UnresolvedMaterial : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };

} // namespace nbrdf
