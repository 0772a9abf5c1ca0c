#pragma once

#include <array>
#include <string>

#include "gkc/common.hpp"

namespace gkc {

/// The three input data streams. The enum order (Lab < Gene < Med) is the
/// canonical concatenation order everywhere order matters.
enum class Modality : int { Lab = 0, Gene = 1, Med = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::Lab, Modality::Gene,
                                                           Modality::Med};

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Lab: return "lab";
        case Modality::Gene: return "gene";
        case Modality::Med: return "med";
    }
    return "?";
}

inline Modality parse_modality(const std::string& s) {
    if (s == "lab") return Modality::Lab;
    if (s == "gene") return Modality::Gene;
    if (s == "med") return Modality::Med;
    throw ConfigError("unknown modality '" + s + "'");
}

}  // namespace gkc
