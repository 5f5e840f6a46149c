#pragma once

// Benchmark beam designs for comparison sweeps.
//
//   sensing_oriented     all power in one sensing beam at the unconstrained
//                        optimum; the user decodes that beam directly, which
//                        caps the rate regardless of the target,
//   dual_functional      the same relaxation restricted to a communication
//                        covariance only, with a scaled-randomization
//                        fallback when the restricted optimum is not rank
//                        one (the remaining gap is reported, not thrown),
//   most_probable_angle  the full pipeline planned against a point prior at
//                        the densest prior angle, scored under the true
//                        prior matrices.

#include <cstdint>

#include "isac/beamopt.hpp"
#include "isac/geometry.hpp"
#include "isac/prior.hpp"

namespace isac {

BeamSolution sensing_oriented(const ConvexInstance& inst, const SensingMatrices& scoring,
                              const SensingLinkBudget& link, const Tolerances& tol = {});

struct RandomizeOptions {
    int samples = 1000;
    std::uint64_t seed = 0x5eedbea5u;
};

BeamSolution dual_functional(const ConvexInstance& inst, const SensingMatrices& scoring,
                             const SensingLinkBudget& link, const Tolerances& tol = {},
                             const RandomizeOptions& ropt = {});

BeamSolution most_probable_angle(const ConvexInstance& inst, const UpaGeometry& geom,
                                 const SceneAngles& target, const VonMisesMixture& prior,
                                 const SensingMatrices& scoring,
                                 const SensingLinkBudget& link, const Tolerances& tol = {});

}  // namespace isac
